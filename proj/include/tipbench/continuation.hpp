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

#ifndef TIPBENCH_CONTINUATION_HPP_
#define TIPBENCH_CONTINUATION_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tipbench/dynamics.hpp"

namespace tipbench {

struct NewtonOptions {
  double tol = 1e-10;  // on ||f||_inf
  int max_iter = 100;
  // Forward-Euler fallback used by FindEquilibrium only.
  double fallback_time = 500.0;
  double fallback_dt = 0.01;
};

// Damped Newton with a finite-difference Jacobian. Returns nullopt on
// non-convergence or non-finite iterates.
std::optional<StateVector> NewtonSolve(const VectorField& field, double control,
                                       const StateVector& guess, const NewtonOptions& opt = {});

// Newton, then forward integration plus Newton polish. Throws kNumerical.
StateVector FindEquilibrium(const VectorField& field, double control, const StateVector& guess,
                            const NewtonOptions& opt = {});
StateVector FindEquilibrium(SystemId id, const SystemParams& p, double control,
                            const StateVector& guess);

struct LeadingEigen {
  double re = 0.0;
  double im = 0.0;       // |Im| of the eigenvalue with largest real part
  double min_abs = 0.0;  // smallest eigenvalue modulus
};
LeadingEigen Leading(const Eigen::MatrixXd& jac);

struct BranchSample {
  double control;
  StateVector state;
  double leading_re;
  double leading_im;
  double min_abs_eig;
};

struct EquilibriumBranch {
  std::string system;
  std::vector<BranchSample> samples;
  // Newton failed before the end of the range (branch end or fold passage).
  bool terminated = false;
  // Last converged control and the nearest control that failed.
  std::pair<double, double> termination_bracket{0.0, 0.0};
};

struct ContinuationOptions {
  // Warm-started corrector; a short iteration cap keeps fold probing cheap.
  NewtonOptions newton{1e-10, 30, 0.0, 0.01};
  // Step halving stops below this fraction of |range| / n_steps.
  double min_step_fraction = 1e-9;
  // Accepted steps move the state by at most jump_tol * (1 + ||x||_inf).
  double jump_tol = 0.25;
};

// Natural-parameter continuation over [c0, c1] (either direction).
EquilibriumBranch ContinueBranch(const VectorField& field, double c0, double c1, int n_steps,
                                 const StateVector& start, const ContinuationOptions& opt = {});
EquilibriumBranch ContinueBranch(SystemId id, const SystemParams& p, double c0, double c1,
                                 int n_steps, const StateVector& start);

enum class BifurcationKind { kNone, kFold, kHopf, kRealCrossing };
std::string_view BifurcationKindName(BifurcationKind kind);

struct BifurcationPoint {
  double control_crit = 0.0;
  BifurcationKind kind = BifurcationKind::kNone;
  std::pair<double, double> bracket{0.0, 0.0};
  double imag_at_crossing = 0.0;
  // |Im| at the crossing is nonzero but below 1e-3: classification is fragile.
  bool degenerate_frequency = false;
};

inline constexpr double kImagTol = 1e-6;

// First event along the branch: a sign change of Re mu_max (refined by
// bisection to relative tolerance 1e-6) or, failing that, a terminating
// fold. kind = kNone when neither occurs.
BifurcationPoint DetectBifurcation(const VectorField& field, const EquilibriumBranch& branch);
// Every sign change along the branch, followed by a terminating fold if any.
std::vector<BifurcationPoint> DetectBifurcations(const VectorField& field,
                                                 const EquilibriumBranch& branch);

// |max Re mu_i| at a stable equilibrium. Throws kNumerical if `state` is not
// an equilibrium (||f||_inf > 1e-6) or is not stable.
double RecoveryRate(const VectorField& field, const StateVector& state, double control);
double RecoveryRate(SystemId id, const SystemParams& p, const StateVector& state, double control);

// CSV: control, state components, leading_re, leading_im.
std::string BranchCsv(const EquilibriumBranch& branch, const std::vector<std::string>& state_names);

}  // namespace tipbench

#endif  // TIPBENCH_CONTINUATION_HPP_
