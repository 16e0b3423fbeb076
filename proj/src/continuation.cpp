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

#include "tipbench/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "tipbench/error.hpp"

namespace tipbench {
namespace {

double InfNorm(const StateVector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool AllFinite(const StateVector& v) { return v.allFinite(); }

StateVector Eval(const VectorField& field, const StateVector& x, double c) {
  StateVector out(field.dim);
  field.eval(x.data(), c, out.data());
  return out;
}

BranchSample MakeSample(const VectorField& field, double c, const StateVector& x) {
  const LeadingEigen le = Leading(FdJacobian(field, x, c));
  return {c, x, le.re, le.im, le.min_abs};
}

// Sign convention: zero counts as non-negative.
bool Positive(double v) { return v >= 0.0; }

}  // namespace

std::optional<StateVector> NewtonSolve(const VectorField& field, double control,
                                       const StateVector& guess, const NewtonOptions& opt) {
  if (guess.size() != field.dim || !AllFinite(guess)) return std::nullopt;
  StateVector x = guess;
  StateVector f = Eval(field, x, control);
  if (!AllFinite(f)) return std::nullopt;
  double norm = InfNorm(f);
  for (int it = 0; it < opt.max_iter; ++it) {
    if (norm < opt.tol) return x;
    Eigen::MatrixXd jac;
    try {
      jac = FdJacobian(field, x, control);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (!jac.allFinite()) return std::nullopt;
    const StateVector dx = jac.completeOrthogonalDecomposition().solve(f);
    if (!AllFinite(dx)) return std::nullopt;
    double alpha = 1.0;
    StateVector x_try = x - dx;
    StateVector f_try = Eval(field, x_try, control);
    while ((!AllFinite(f_try) || InfNorm(f_try) >= norm) && alpha > 1.0 / 1024.0) {
      alpha *= 0.5;
      x_try = x - alpha * dx;
      f_try = Eval(field, x_try, control);
    }
    if (!AllFinite(x_try) || !AllFinite(f_try)) return std::nullopt;
    x = x_try;
    f = f_try;
    norm = InfNorm(f);
  }
  if (norm < opt.tol) return x;
  return std::nullopt;
}

StateVector FindEquilibrium(const VectorField& field, double control, const StateVector& guess,
                            const NewtonOptions& opt) {
  if (guess.size() != field.dim || !AllFinite(guess)) {
    Fail(ErrorKind::kInvalidArgument, "find_equilibrium: guess must be finite with matching dimension");
  }
  if (auto x = NewtonSolve(field, control, guess, opt)) return *x;
  StateVector x = guess;
  StateVector f(field.dim);
  const long steps = std::lround(opt.fallback_time / opt.fallback_dt);
  for (long s = 0; s < steps; ++s) {
    field.eval(x.data(), control, f.data());
    x += opt.fallback_dt * f;
    if (!AllFinite(x)) {
      Fail(ErrorKind::kNumerical, "find_equilibrium: forward integration diverged");
    }
  }
  if (auto polished = NewtonSolve(field, control, x, opt)) return *polished;
  Fail(ErrorKind::kNumerical, "find_equilibrium: Newton did not converge after fallback integration");
}

StateVector FindEquilibrium(SystemId id, const SystemParams& p, double control,
                            const StateVector& guess) {
  return FindEquilibrium(CatalogField(id, p), control, guess);
}

LeadingEigen Leading(const Eigen::MatrixXd& jac) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(jac, false);
  if (es.info() != Eigen::Success) Fail(ErrorKind::kNumerical, "eigensolver did not converge");
  const Eigen::VectorXcd ev = es.eigenvalues();
  LeadingEigen out;
  out.re = -std::numeric_limits<double>::infinity();
  out.min_abs = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i].real() > out.re) {
      out.re = ev[i].real();
      out.im = std::fabs(ev[i].imag());
    }
    out.min_abs = std::min(out.min_abs, std::abs(ev[i]));
  }
  return out;
}

EquilibriumBranch ContinueBranch(const VectorField& field, double c0, double c1, int n_steps,
                                 const StateVector& start, const ContinuationOptions& opt) {
  Require(n_steps >= 2, "continue_branch: n_steps must be >= 2");
  Require(c0 != c1, "continue_branch: empty control range");
  EquilibriumBranch branch;
  auto first = NewtonSolve(field, c0, start, opt.newton);
  if (!first) {
    Fail(ErrorKind::kNumerical, "continue_branch: no equilibrium at the start of the range");
  }
  branch.samples.push_back(MakeSample(field, c0, *first));

  const double full_step = (c1 - c0) / n_steps;
  const double min_step = std::fabs(full_step) * opt.min_step_fraction;
  double step = full_step;
  double c = c0;
  StateVector x = *first;
  int k = 0;  // index of the next regular grid point
  int streak = 0;  // consecutive accepted steps since the last failure
  while (k < n_steps) {
    const double grid_target = c0 + (k + 1) * full_step;
    double target = c + step;
    // Never overshoot the next grid point; snap when rounding lands just short.
    const double slack = 1e-9 * std::fabs(full_step);
    if ((full_step > 0 && target >= grid_target - slack) ||
        (full_step < 0 && target <= grid_target + slack)) {
      target = grid_target;
    }
    auto next = NewtonSolve(field, target, x, opt.newton);
    const bool ok = next.has_value() &&
                    InfNorm(*next - x) <= opt.jump_tol * (1.0 + InfNorm(x));
    if (!ok) {
      streak = 0;
      step *= 0.5;
      if (std::fabs(step) < min_step) {
        branch.terminated = true;
        branch.termination_bracket = {c, target};
        break;
      }
      continue;
    }
    try {
      branch.samples.push_back(MakeSample(field, target, *next));
    } catch (const Error&) {
      branch.terminated = true;
      branch.termination_bracket = {c, target};
      break;
    }
    c = target;
    x = *next;
    if (target == grid_target) ++k;
    if (++streak >= 2) {
      step = std::fabs(step * 2.0) > std::fabs(full_step) ? full_step : step * 2.0;
    }
  }
  return branch;
}

EquilibriumBranch ContinueBranch(SystemId id, const SystemParams& p, double c0, double c1,
                                 int n_steps, const StateVector& start) {
  EquilibriumBranch b = ContinueBranch(CatalogField(id, p), c0, c1, n_steps, start);
  b.system = std::string(SystemName(id));
  return b;
}

std::string_view BifurcationKindName(BifurcationKind kind) {
  switch (kind) {
    case BifurcationKind::kNone:
      return "none";
    case BifurcationKind::kFold:
      return "fold";
    case BifurcationKind::kHopf:
      return "hopf";
    case BifurcationKind::kRealCrossing:
      return "transcritical_or_fold_real";
  }
  return "none";
}

namespace {

BifurcationPoint RefineCrossing(const VectorField& field, const BranchSample& left,
                                const BranchSample& right) {
  double a = left.control, b = right.control;
  double re_a = left.leading_re;
  double im_a = left.leading_im, im_b = right.leading_im;
  double re_b = right.leading_re;
  StateVector x_a = left.state;
  NewtonOptions nopt;
  for (int it = 0; it < 200; ++it) {
    const double tol = 1e-6 * std::max(std::fabs(a), std::fabs(b));
    if (std::fabs(b - a) <= std::max(tol, 1e-14)) break;
    const double m = 0.5 * (a + b);
    auto xm = NewtonSolve(field, m, x_a, nopt);
    if (!xm) break;
    LeadingEigen le;
    try {
      le = Leading(FdJacobian(field, *xm, m));
    } catch (const Error&) {
      break;
    }
    if (Positive(le.re) == Positive(re_a)) {
      a = m;
      re_a = le.re;
      im_a = le.im;
      x_a = *xm;
    } else {
      b = m;
      re_b = le.re;
      im_b = le.im;
    }
  }
  BifurcationPoint bp;
  bp.bracket = {a, b};
  // Linear interpolation of Re mu inside the final bracket.
  const double denom = re_b - re_a;
  bp.control_crit = denom != 0.0 ? a - re_a * (b - a) / denom : 0.5 * (a + b);
  if (!(std::min(a, b) <= bp.control_crit && bp.control_crit <= std::max(a, b))) {
    bp.control_crit = 0.5 * (a + b);
  }
  const double im = std::fabs(re_a) <= std::fabs(re_b) ? im_a : im_b;
  bp.imag_at_crossing = im;
  bp.kind = im > kImagTol ? BifurcationKind::kHopf : BifurcationKind::kRealCrossing;
  bp.degenerate_frequency = im > 0.0 && im < 1e-3;
  return bp;
}

std::optional<BifurcationPoint> TerminalFold(const EquilibriumBranch& branch) {
  if (!branch.terminated || branch.samples.size() < 2) return std::nullopt;
  double scale = 0.0;
  for (const auto& s : branch.samples) scale = std::max(scale, s.min_abs_eig);
  const BranchSample& last = branch.samples.back();
  if (!(scale > 0.0) || last.min_abs_eig > 1e-2 * scale) return std::nullopt;
  BifurcationPoint bp;
  bp.kind = BifurcationKind::kFold;
  bp.bracket = branch.termination_bracket;
  bp.control_crit = 0.5 * (bp.bracket.first + bp.bracket.second);
  return bp;
}

// Near a fold both branches lie within Newton reach, so the continued
// eigenvalue can flip sign spuriously in the last refined samples.
bool InFoldZone(const EquilibriumBranch& branch, double control) {
  const double span = std::fabs(branch.samples.back().control - branch.samples.front().control);
  return std::fabs(control - branch.termination_bracket.first) <= 1e-6 * std::max(span, 1e-12);
}

}  // namespace

std::vector<BifurcationPoint> DetectBifurcations(const VectorField& field,
                                                 const EquilibriumBranch& branch) {
  Require(branch.samples.size() >= 2, "detect_bifurcation: branch needs >= 2 samples");
  std::vector<BifurcationPoint> out;
  const auto fold = TerminalFold(branch);
  for (size_t k = 0; k + 1 < branch.samples.size(); ++k) {
    const auto& l = branch.samples[k];
    const auto& r = branch.samples[k + 1];
    if (Positive(l.leading_re) == Positive(r.leading_re)) continue;
    if (fold && InFoldZone(branch, l.control)) break;
    out.push_back(RefineCrossing(field, l, r));
  }
  if (fold) out.push_back(*fold);
  return out;
}

BifurcationPoint DetectBifurcation(const VectorField& field, const EquilibriumBranch& branch) {
  const std::vector<BifurcationPoint> all = DetectBifurcations(field, branch);
  if (all.empty()) return {};
  return all.front();
}

double RecoveryRate(const VectorField& field, const StateVector& state, double control) {
  const StateVector f = Eval(field, state, control);
  if (!AllFinite(f) || InfNorm(f) > 1e-6) {
    Fail(ErrorKind::kNumerical, "recovery_rate: state is not an equilibrium");
  }
  const LeadingEigen le = Leading(FdJacobian(field, state, control));
  if (!(le.re < 0.0)) Fail(ErrorKind::kNumerical, "recovery_rate: equilibrium is not stable");
  return std::fabs(le.re);
}

double RecoveryRate(SystemId id, const SystemParams& p, const StateVector& state, double control) {
  return RecoveryRate(CatalogField(id, p), state, control);
}

std::string BranchCsv(const EquilibriumBranch& branch, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "control";
  const Eigen::Index dim = branch.samples.empty() ? 0 : branch.samples.front().state.size();
  for (Eigen::Index i = 0; i < dim; ++i) {
    os << ',' << (static_cast<size_t>(i) < names.size() ? names[i] : "x" + std::to_string(i + 1));
  }
  os << ",leading_re,leading_im\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (const auto& s : branch.samples) {
    put(s.control);
    for (Eigen::Index i = 0; i < dim; ++i) {
      os << ',';
      put(s.state[i]);
    }
    os << ',';
    put(s.leading_re);
    os << ',';
    put(s.leading_im);
    os << '\n';
  }
  return os.str();
}

}  // namespace tipbench
