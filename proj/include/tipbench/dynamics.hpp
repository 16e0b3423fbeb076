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

#ifndef TIPBENCH_DYNAMICS_HPP_
#define TIPBENCH_DYNAMICS_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tipbench {

using StateVector = Eigen::VectorXd;

enum class SystemId {
  kBFold,
  kBHopf,
  kBTranscritical,
  kBHarvesting,
  kBRmTc,
  kBRmHopf,
  kBSeirx,
  kBAmoc,
  kRSaddleNode,
  kRBautin,
  kRCompostBomb,
  kRAmoc,
};
inline constexpr int kNumSystems = 12;

std::string_view SystemName(SystemId id);
SystemId SystemFromName(std::string_view name);  // throws kConfig
std::span<const SystemId> AllSystems();

enum class TippingKind { kBifurcation, kRate };

// Closed-form raw forcing used by the r-tipping systems.
enum class RateForcing { kNone, kSaddleTanh, kBautinTanh, kCompostRamp, kAmocSech };

// Named scalar parameters for one system. Order is fixed per system; the
// drift fields read by position.
struct SystemParams {
  SystemId system = SystemId::kBFold;
  std::vector<std::string> names;
  std::vector<double> values;

  double Get(std::string_view name) const;
  void Set(std::string_view name, double value);
  bool Has(std::string_view name) const;
};

struct SystemInfo {
  SystemId id;
  std::string name;
  TippingKind kind;
  int dim;
  std::vector<std::string> state_names;
  std::string control_name;
  // Raw control at lambda~ = 0; for r-systems the value with no forcing.
  double control_start;
  // Raw control at lambda~ = 1 (b-systems only).
  std::optional<double> control_crit;
  std::string tip_rule;
  std::string observable;
  std::string bounds;
  double dt;
  double out_interval;
  int length;
  StateVector initial_guess;
  RateForcing rate_forcing;
  std::string rate_param;       // tipping rate parameter name
  std::string rate_flat_param;  // non-tipping rate parameter name
};

const SystemInfo& GetSystemInfo(SystemId id);
SystemParams DefaultParams(SystemId id);

// Deterministic drift f(x, control). `control` is the raw forcing parameter
// (mu, h, a, omega, H, lambda, Lambda or T_a). `time` is accepted for
// interface uniformity; all fields are autonomous given the control.
StateVector Drift(SystemId id, const SystemParams& p, const StateVector& x,
                  double control, double time = 0.0);
// Allocation-free variant used by the integrators.
void DriftInto(SystemId id, const SystemParams& p, const double* x, double control,
               double* out);

// Additive diffusion amplitude per state component (Euler-Maruyama adds
// amp_i * sqrt(dt) * N(0,1)).
StateVector NoiseAmplitude(SystemId id, const SystemParams& p);

// Projects a state onto the documented admissible set in place.
void ProjectState(SystemId id, const SystemParams& p, double* x, double control);

// AMOC overturning strength Q in Sv for state (S_N, S_T) in psu.
double AmocStrength(const SystemParams& p, const StateVector& x);
// Radius of the stable small cycle of the unshifted Bautin normal form.
double BautinRestRadius(const SystemParams& p);
// AMOC drift evaluated with an explicit branch choice (for continuity checks).
StateVector AmocDriftBranch(const SystemParams& p, const StateVector& x, double hosing,
                            bool positive_branch);

double RForcingSaddle(double lambda_max, double epsilon, double time);
double RForcingSech(double h0, double dh, double rate, double t_crit, double time);

// Central finite-difference Jacobian with step max(1e-6, 1e-6 |x_i|).
// For AMOC, fails with kNumerical if a stencil straddles Q = 0.
Eigen::MatrixXd Jacobian(SystemId id, const SystemParams& p, const StateVector& x,
                         double control);

// Index of the first sample satisfying the system's tipping rule.
std::optional<size_t> FirstTipIndex(SystemId id, const SystemParams& p,
                                    std::span<const StateVector> trajectory);
bool TipCriterion(SystemId id, const SystemParams& p, std::span<const StateVector> trajectory);
// Scalar observable (x, Q, rho, T_s, ...) of one state.
double Observable(SystemId id, const SystemParams& p, const StateVector& x);

// Generic autonomous-in-control vector field, shared by catalog systems and
// sampled polynomial drivers.
struct VectorField {
  int dim = 0;
  std::function<void(const double* x, double control, double* out)> eval;
  // Optional guard called before each Jacobian stencil; may throw.
  std::function<void(const StateVector& x, double control, double h_max)> smooth_guard;
};

VectorField CatalogField(SystemId id, const SystemParams& p);

// Central finite-difference Jacobian of a generic field.
Eigen::MatrixXd FdJacobian(const VectorField& field, const StateVector& x, double control);

// Machine-readable catalog (id, dimension, parameters, control, critical
// value, tip rule, bounds, simulation defaults).
std::string CatalogJson();

}  // namespace tipbench

#endif  // TIPBENCH_DYNAMICS_HPP_
