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

#ifndef TIPBENCH_SIMULATE_HPP_
#define TIPBENCH_SIMULATE_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tipbench/dynamics.hpp"
#include "tipbench/prior.hpp"
#include "tipbench/rng.hpp"

namespace tipbench {

enum class ForcingClass {
  // Validation families.
  kCritical,
  kApproaching,
  kReceding,
  kFlat,
  kEquilibrium,
  // Training families.
  kBezierAndHold,
  kRampAndHold,
  kConstant,
};
std::string_view ForcingClassName(ForcingClass c);
ForcingClass ForcingClassFromName(std::string_view name);  // throws kData

using NamedValues = std::vector<std::pair<std::string, double>>;

struct ForcingSchedule {
  ForcingClass cls = ForcingClass::kConstant;
  // lambda~ per output step.
  std::vector<double> values;
  NamedValues params;
  // First step with lambda~ >= 1 (b-systems and prior); unset otherwise.
  std::optional<int> t_crit;

  double Param(std::string_view name) const;  // throws kInvalidArgument
  bool HasParam(std::string_view name) const;
  // Linear interpolation at fractional step position, clamped to the ends.
  double At(double step) const;
};

// de Casteljau evaluation at s in [0, 1].
double BezierEval(std::span<const double> control, double s);

inline constexpr double kBezierProb = 0.4;
inline constexpr double kRampProb = 0.4;

ForcingSchedule SampleTrainingSchedule(CounterRng& rng, int length);
// Linear families. Critical w.p. 0.5, otherwise uniform over the other four.
ForcingSchedule SampleValidationSchedule(CounterRng& rng, int length,
                                         std::optional<ForcingClass> cls = std::nullopt);
// r-systems: critical (tipping rate) w.p. 0.5, otherwise flat (non-tipping
// rate) or equilibrium (no forcing) with equal probability.
ForcingSchedule SampleRateSchedule(CounterRng& rng, SystemId id, const SystemParams& p,
                                   int length, std::optional<ForcingClass> cls = std::nullopt);

// Raw control of an r-system at absolute time t for the given rate (0 = no
// forcing). The schedule carries the time origin and protocol constants.
double RateControl(SystemId id, const SystemParams& p, const ForcingSchedule& s, double t);
// Forcing progress in [0, 1] scaled by rate / tipping rate.
double RateLambdaTilde(SystemId id, const SystemParams& p, const ForcingSchedule& s, double t);

struct SimOptions {
  double dt = 0.01;
  double out_interval = 1.0;
  double burn_in = 100.0;
  // |state| above this counts as blow-up (as does any non-finite value).
  double blowup = 1e8;
};

struct Episode {
  std::string system;       // "prior" or a catalog system name
  std::string process_ref;  // process hash or catalog system name
  uint64_t episode_seed = 0;
  ForcingClass forcing_class = ForcingClass::kConstant;
  double dt = 0.01;
  double out_interval = 1.0;
  int length = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  bool tipped = false;
  std::optional<int> t_crit;
  bool valid = true;
  std::optional<int> invalid_step;
  NamedValues schedule_params;

  bool HasColumn(std::string_view name) const;
  const std::vector<double>& Column(std::string_view name) const;  // throws kData
  // Driving series used by the EWS baselines.
  const std::vector<double>& Signal() const;
  bool IsCritical() const { return forcing_class == ForcingClass::kCritical; }
};

// Prior episode. Columns: z1, z2, u1..u14, lambda_tilde, rdtc.
Episode SimulateProcess(const GenerativeProcess& psi, const ForcingSchedule& schedule,
                        uint64_t episode_seed, const SimOptions& opt = {});

// Catalog episode. Columns: state names, control, observable, lambda_tilde,
// rdtc. dt and out_interval default to the catalog values.
Episode SimulateSystem(SystemId id, const SystemParams& p, const ForcingSchedule& schedule,
                       uint64_t episode_seed, std::optional<SimOptions> opt = std::nullopt);

// Draws the schedule from the "schedule" child of episode_seed, then simulates.
Episode SimulateValidationEpisode(SystemId id, const SystemParams& p, uint64_t episode_seed,
                                  std::optional<ForcingClass> cls = std::nullopt,
                                  std::optional<int> length = std::nullopt);

struct EpisodeEnsemble {
  std::string process_hash;
  std::vector<Episode> episodes;  // valid episodes only
  int invalid_count = 0;
};

inline constexpr int kEpisodesPerEnsemble = 6;
inline constexpr int kPriorEpisodeLength = 400;

EpisodeEnsemble SimulateEnsemble(const GenerativeProcess& psi, const CounterRng& rng,
                                 int k = kEpisodesPerEnsemble, int length = kPriorEpisodeLength,
                                 const SimOptions& opt = {});

// Lambda* = tanh(5 Lambda).
inline double RdtcTransform(double rdtc) { return std::tanh(5.0 * rdtc); }

// One JSON object, no trailing newline. Non-finite samples become null.
std::string EpisodeToJsonl(const Episode& e);
Episode EpisodeFromJson(std::string_view line);  // throws kData

}  // namespace tipbench

#endif  // TIPBENCH_SIMULATE_HPP_
