/*
 * Copyright 2026 The tipbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TIPBENCH_PRIOR_HPP_
#define TIPBENCH_PRIOR_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tipbench/continuation.hpp"
#include "tipbench/dynamics.hpp"
#include "tipbench/rng.hpp"

namespace tipbench {

enum class BifClass { kFold, kHopf, kTranscritical };
std::string_view BifClassName(BifClass c);
BifClass BifClassFromName(std::string_view name);

// Monomial basis (1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3).
inline constexpr int kNumMonomials = 10;
void Monomials(double x, double y, double* out);
// Indices 0..9 address the x equation, 10..19 the y equation.
inline bool IsCubicCoefficient(int k) { return k % kNumMonomials >= 6; }

using Coefficients = std::array<double, 2 * kNumMonomials>;

// Polynomial drift with coefficient `index` replaced by `value` (index < 0
// keeps all coefficients).
void PolynomialDrift(const Coefficients& c, const double* z, int index, double value, double* out);
VectorField PolynomialField(const Coefficients& c, int index);

struct PolynomialDriver {
  Coefficients coeffs{};
  StateVector equilibrium;
  double recovery = 0.0;
  int bif_param_index = -1;
  double p0 = 0.0;
  double p_crit = 0.0;
  BifClass bif_class = BifClass::kFold;

  // Drift at raw control p (coefficient bif_param_index set to p).
  void Drift(const double* z, double p, double* out) const {
    PolynomialDrift(coeffs, z, bif_param_index, p, out);
  }
};

struct ScreenResult {
  bool accepted = false;
  StateVector equilibrium;
  double recovery = 0.0;
  std::string reason;
};

// Euler from z0 ~ N(0, 4I), dt = 0.01, up to 100 time units; accepted iff the
// last 10 points have range norm < 1e-8, |z| stays < 1e3 and the polished
// equilibrium is stable.
ScreenResult ScreenDriver(const Coefficients& c, CounterRng& rng);

struct DriverSamplingStats {
  int attempts = 0;        // screened models that went to the continuation scan
  int models = 0;          // polynomial models drawn in total
  int screened_ok = 0;     // models passing screening
  BifClass target = BifClass::kFold;
};

inline constexpr int kModelsPerAttempt = 100;
inline constexpr int kAttemptsPerSample = 50;
inline constexpr int kScanSteps = 400;
inline constexpr double kScanRange = 5.0;

// Draws the target class uniformly, then searches. Throws kNumerical with the
// attempt counts when the retry budget is exhausted.
PolynomialDriver SampleDriver(CounterRng& rng, DriverSamplingStats* stats = nullptr,
                              std::optional<BifClass> target = std::nullopt);

// Continuation scan of every nonzero coefficient over [-5, 5] split at p0.
// Returns the admissible event closest to p0 (lower index wins ties).
struct ScanHit {
  int index;
  double p0;
  double p_crit;
  BifClass cls;
};
std::optional<ScanHit> ScanBifurcations(const Coefficients& c, const StateVector& equilibrium,
                                        BifClass target);

struct InteractionGraph {
  int n_vars = 14;
  int n_hidden = 8;
  std::vector<int> d_out;  // D_i^+ per variable
  std::vector<int> d_in;   // D_i^- per variable
  std::vector<std::pair<int, int>> var_to_hidden;
  std::vector<std::pair<int, int>> hidden_to_var;
  std::vector<std::pair<int, int>> edges;         // i -> j, sorted, unique
  std::vector<std::pair<int, int>> driver_edges;  // (channel 0|1, variable)

  std::vector<int> Parents(int j) const;
  std::vector<int> DriverInputs(int j) const;
};

// Pr(D = d) proportional to d^-2 on 1..8.
std::array<double, 8> DegreePmf();
InteractionGraph ProjectBipartite(int n_vars, int n_hidden,
                                  std::vector<std::pair<int, int>> var_to_hidden,
                                  std::vector<std::pair<int, int>> hidden_to_var);
InteractionGraph SampleGraph(CounterRng& rng, int n_vars = 14, int n_hidden = 8,
                             double p_input = 0.8);

inline constexpr int kHiddenUnits = 32;

// Two linear layers with tanh between: in -> 32 -> 1.
struct FlowMlp {
  int in_dim = 0;
  std::vector<double> w1;  // kHiddenUnits x in_dim, row-major
  std::vector<double> b1;  // kHiddenUnits
  std::vector<double> w2;  // kHiddenUnits
  double b2 = 0.0;
  double Eval(const double* in) const;
};

struct AuxVariable {
  std::vector<int> parents;  // auxiliary inputs, ascending
  std::vector<int> drivers;  // driver channels, ascending
  FlowMlp flow;
  double s_w = 1.0;
  double s_p = 0.5;  // stored; inactive with two layers
  double gamma = 0.0;
  double eta = 0.0;
  double sigma = 0.0;
};

struct AuxiliarySde {
  std::vector<AuxVariable> vars;
};

inline constexpr int kResampleCap = 10000;
AuxiliarySde SampleAuxSde(CounterRng& rng, const InteractionGraph& graph);

struct GenerativeProcess {
  PolynomialDriver driver;
  InteractionGraph graph;
  AuxiliarySde aux;
  uint64_t seed = 0;
  DriverSamplingStats stats;
};

GenerativeProcess SampleProcess(uint64_t seed);

std::string ProcessToJson(const GenerativeProcess& psi);
GenerativeProcess ProcessFromJson(std::string_view text);  // throws kData
// "psi-" + 16 hex digits of FNV-1a over the JSON document.
std::string ProcessHash(const GenerativeProcess& psi);

}  // namespace tipbench

#endif  // TIPBENCH_PRIOR_HPP_
