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

#include "tipbench/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "json.hpp"

#include "tipbench/continuation.hpp"
#include "tipbench/error.hpp"

namespace tipbench {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDriverNoiseScale = 0.01;
constexpr double kFlatPhi = 0.9;
constexpr double kFlatRelStd = 0.01;

int SubSteps(double dt, double out_interval) {
  Require(dt > 0.0 && out_interval > 0.0, "simulate: dt and out_interval must be positive");
  const double ratio = out_interval / dt;
  const long n = std::lround(ratio);
  Require(n >= 1 && std::fabs(ratio - static_cast<double>(n)) < 1e-9 * ratio,
          "simulate: dt must divide out_interval");
  return static_cast<int>(n);
}

// Smooth half-cosine warm-up from 0 to `target` over the burn-in window.
double WarmUp(double target, double tau, double burn_in) {
  if (burn_in <= 0.0) return target;
  return target * 0.5 * (1.0 - std::cos(std::numbers::pi * std::min(1.0, tau / burn_in)));
}

std::optional<int> FirstAtOrAbove(const std::vector<double>& v, double level) {
  for (size_t k = 0; k < v.size(); ++k) {
    if (v[k] >= level) return static_cast<int>(k);
  }
  return std::nullopt;
}

bool Blown(const double* x, int n, double limit) {
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || std::fabs(x[i]) > limit) return true;
  }
  return false;
}

void AppendNumber(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void AppendString(std::string& out, std::string_view s) { out += Json(std::string(s)).dump(); }

// Writes row k of the episode; columns are preallocated.
struct Recorder {
  Episode* e;
  void Row(int k, std::initializer_list<std::span<const double>> parts) {
    size_t c = 0;
    for (auto part : parts) {
      for (double v : part) e->columns[c++][k] = v;
    }
  }
};

void Allocate(Episode& e, int length) {
  e.length = length;
  e.columns.assign(e.names.size(), std::vector<double>(static_cast<size_t>(length), kNaN));
}

}  // namespace

std::string_view ForcingClassName(ForcingClass c) {
  switch (c) {
    case ForcingClass::kCritical:
      return "critical";
    case ForcingClass::kApproaching:
      return "approaching";
    case ForcingClass::kReceding:
      return "receding";
    case ForcingClass::kFlat:
      return "flat";
    case ForcingClass::kEquilibrium:
      return "equilibrium";
    case ForcingClass::kBezierAndHold:
      return "bezier_and_hold";
    case ForcingClass::kRampAndHold:
      return "ramp_and_hold";
    case ForcingClass::kConstant:
      return "constant";
  }
  return "constant";
}

ForcingClass ForcingClassFromName(std::string_view name) {
  for (ForcingClass c :
       {ForcingClass::kCritical, ForcingClass::kApproaching, ForcingClass::kReceding,
        ForcingClass::kFlat, ForcingClass::kEquilibrium, ForcingClass::kBezierAndHold,
        ForcingClass::kRampAndHold, ForcingClass::kConstant}) {
    if (ForcingClassName(c) == name) return c;
  }
  Fail(ErrorKind::kData, "unknown forcing class '" + std::string(name) + "'");
}

double ForcingSchedule::Param(std::string_view name) const {
  for (const auto& [k, v] : params) {
    if (k == name) return v;
  }
  Fail(ErrorKind::kInvalidArgument, "schedule has no parameter '" + std::string(name) + "'");
}

bool ForcingSchedule::HasParam(std::string_view name) const {
  return std::any_of(params.begin(), params.end(), [&](const auto& kv) { return kv.first == name; });
}

double ForcingSchedule::At(double step) const {
  Require(!values.empty(), "schedule is empty");
  if (step <= 0.0) return values.front();
  const double last = static_cast<double>(values.size() - 1);
  if (step >= last) return values.back();
  const size_t i = static_cast<size_t>(step);
  const double f = step - static_cast<double>(i);
  return f == 0.0 ? values[i] : values[i] + f * (values[i + 1] - values[i]);
}

double BezierEval(std::span<const double> control, double s) {
  Require(!control.empty(), "bezier: need at least one control point");
  std::vector<double> b(control.begin(), control.end());
  for (size_t r = b.size() - 1; r > 0; --r) {
    for (size_t i = 0; i < r; ++i) b[i] = (1.0 - s) * b[i] + s * b[i + 1];
  }
  return b[0];
}

ForcingSchedule SampleTrainingSchedule(CounterRng& rng, int length) {
  Require(length >= 2, "training schedule: length must be >= 2");
  ForcingSchedule s;
  s.values.assign(static_cast<size_t>(length), 0.0);
  const double u = rng.Uniform();
  if (u >= kBezierProb + kRampProb) {
    s.cls = ForcingClass::kConstant;
    return s;
  }
  const double h = rng.Uniform(0.6, 0.8);
  const double level = rng.Bernoulli(0.5) ? 1.0 : rng.Uniform(0.6, 1.2);
  const double t_hold = h * (length - 1);
  s.params = {{"h", h}, {"L", level}};
  if (u < kBezierProb) {
    s.cls = ForcingClass::kBezierAndHold;
    static constexpr double kNcWeights[] = {2.0, 3.0, 2.0, 1.0};
    const int n_c = 3 + static_cast<int>(rng.Categorical(kNcWeights));
    std::vector<double> ctrl{0.0};
    for (int i = 0; i < n_c - 2; ++i) {
      ctrl.push_back(std::clamp(rng.Uniform(0.1 * level, 0.9 * level), 0.0, level));
    }
    ctrl.push_back(level);
    ctrl.push_back(level);  // duplicated end point: near-zero slope into the hold
    s.params.emplace_back("n_c", n_c);
    for (size_t i = 0; i < ctrl.size(); ++i) s.params.emplace_back("c" + std::to_string(i), ctrl[i]);
    for (int k = 0; k < length; ++k) {
      const double f = k / t_hold;
      s.values[k] = f >= 1.0 ? level : BezierEval(ctrl, f);
    }
  } else {
    s.cls = ForcingClass::kRampAndHold;
    for (int k = 0; k < length; ++k) s.values[k] = level * std::min(1.0, k / t_hold);
  }
  s.t_crit = FirstAtOrAbove(s.values, 1.0);
  return s;
}

ForcingSchedule SampleValidationSchedule(CounterRng& rng, int length,
                                         std::optional<ForcingClass> cls) {
  Require(length >= 2, "validation schedule: length must be >= 2");
  ForcingSchedule s;
  if (cls) {
    Require(*cls <= ForcingClass::kEquilibrium, "validation schedule: not a validation class");
    s.cls = *cls;
  } else if (rng.Bernoulli(0.5)) {
    s.cls = ForcingClass::kCritical;
  } else {
    s.cls = static_cast<ForcingClass>(1 + rng.Below(4));
  }
  s.values.assign(static_cast<size_t>(length), 0.0);
  const double last = static_cast<double>(length - 1);
  switch (s.cls) {
    case ForcingClass::kCritical: {
      const double l0 = rng.Uniform(0.0, 0.5);
      const int tc = std::max(1, static_cast<int>(std::lround(rng.Uniform(0.5, 0.9) * last)));
      for (int k = 0; k < length; ++k) {
        s.values[k] = k >= tc ? 1.0 : l0 + (1.0 - l0) * k / tc;
      }
      s.params = {{"lambda0", l0}, {"t_c", tc}};
      s.t_crit = tc;
      break;
    }
    case ForcingClass::kApproaching: {
      const double l0 = rng.Uniform(0.0, 0.5);
      const double eps = rng.Uniform(0.1, 0.4);
      const double end = 1.0 - eps;
      for (int k = 0; k < length; ++k) s.values[k] = l0 + (end - l0) * k / last;
      s.values.back() = end;
      s.params = {{"lambda0", l0}, {"epsilon", eps}};
      break;
    }
    case ForcingClass::kReceding: {
      const double l0 = rng.Uniform(0.4, 0.9);
      const double end = rng.Uniform(0.0, 0.5 * l0);
      for (int k = 0; k < length; ++k) s.values[k] = l0 + (end - l0) * k / last;
      s.params = {{"lambda0", l0}, {"lambda_end", end}};
      break;
    }
    case ForcingClass::kFlat: {
      const double l0 = rng.Uniform(0.2, 0.9);
      const double sd = kFlatRelStd * l0;
      const double innov = sd * std::sqrt(1.0 - kFlatPhi * kFlatPhi);
      double d = sd * rng.Normal();
      for (int k = 0; k < length; ++k) {
        if (k > 0) d = kFlatPhi * d + innov * rng.Normal();
        s.values[k] = l0 + d;
      }
      s.params = {{"lambda0", l0}, {"jitter_std", sd}, {"jitter_phi", kFlatPhi}};
      break;
    }
    case ForcingClass::kEquilibrium:
    default:
      break;
  }
  return s;
}

ForcingSchedule SampleRateSchedule(CounterRng& rng, SystemId id, const SystemParams& p,
                                   int length, std::optional<ForcingClass> cls) {
  const SystemInfo& info = GetSystemInfo(id);
  Require(info.kind == TippingKind::kRate, "rate schedule: " + info.name + " is not an r-system");
  Require(length >= 2, "rate schedule: length must be >= 2");
  ForcingSchedule s;
  if (cls) {
    Require(*cls == ForcingClass::kCritical || *cls == ForcingClass::kFlat ||
                *cls == ForcingClass::kEquilibrium,
            "rate schedule: class must be critical, flat or equilibrium");
    s.cls = *cls;
  } else if (rng.Bernoulli(0.5)) {
    s.cls = ForcingClass::kCritical;
  } else {
    s.cls = rng.Bernoulli(0.5) ? ForcingClass::kFlat : ForcingClass::kEquilibrium;
  }
  const double rate_tip = p.Get(info.rate_param);
  double rate = 0.0;
  if (s.cls == ForcingClass::kCritical) rate = rate_tip;
  if (s.cls == ForcingClass::kFlat) rate = p.Get(info.rate_flat_param);
  const double span = (length - 1) * info.out_interval;
  double t0 = 0.0;
  s.params = {{"rate", rate}, {"rate_tip", rate_tip}};
  // The timing of the transition varies per episode.
  switch (info.rate_forcing) {
    case RateForcing::kSaddleTanh:
    case RateForcing::kBautinTanh: {
      const double frac = rng.Uniform(0.4, 0.7);
      s.params.emplace_back("center_fraction", frac);
      t0 = -frac * span;
      break;
    }
    case RateForcing::kCompostRamp:
      s.params.emplace_back("t_start", rng.Uniform(0.1, 0.4) * span);
      break;
    case RateForcing::kAmocSech:
      s.params.emplace_back("t_center", rng.Uniform(0.4, 0.6) * span);
      break;
    case RateForcing::kNone:
      break;
  }
  s.params.emplace_back("t0", t0);
  s.values.resize(static_cast<size_t>(length));
  for (int k = 0; k < length; ++k) {
    s.values[k] = RateLambdaTilde(id, p, s, t0 + k * info.out_interval);
  }
  return s;
}

double RateControl(SystemId id, const SystemParams& p, const ForcingSchedule& s, double t) {
  const SystemInfo& info = GetSystemInfo(id);
  const double rate = s.Param("rate");
  if (rate == 0.0) return info.control_start;
  switch (info.rate_forcing) {
    case RateForcing::kSaddleTanh:
    case RateForcing::kBautinTanh:
      return RForcingSaddle(p.Get("lambda_max"), rate, t);
    case RateForcing::kCompostRamp:
      return std::clamp(rate * (t - s.Param("t_start")), 0.0, p.Get("dT_max"));
    case RateForcing::kAmocSech:
      return RForcingSech(p.Get("H0"), p.Get("dH"), rate, s.Param("t_center"), t);
    case RateForcing::kNone:
      break;
  }
  Fail(ErrorKind::kInvalidArgument, "rate control: " + info.name + " has no rate forcing");
}

double RateLambdaTilde(SystemId id, const SystemParams& p, const ForcingSchedule& s, double t) {
  const SystemInfo& info = GetSystemInfo(id);
  const double rate = s.Param("rate");
  if (rate == 0.0) return 0.0;
  double amplitude = 1.0;
  switch (info.rate_forcing) {
    case RateForcing::kSaddleTanh:
    case RateForcing::kBautinTanh:
      amplitude = p.Get("lambda_max");
      break;
    case RateForcing::kCompostRamp:
      amplitude = p.Get("dT_max");
      break;
    case RateForcing::kAmocSech:
      amplitude = p.Get("dH");
      break;
    case RateForcing::kNone:
      break;
  }
  const double progress = (RateControl(id, p, s, t) - info.control_start) / amplitude;
  return rate / s.Param("rate_tip") * std::clamp(progress, 0.0, 1.0);
}

bool Episode::HasColumn(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& Episode::Column(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) Fail(ErrorKind::kData, "episode has no column '" + std::string(name) + "'");
  return columns[static_cast<size_t>(it - names.begin())];
}

const std::vector<double>& Episode::Signal() const {
  return HasColumn("observable") ? Column("observable") : Column("z1");
}

Episode SimulateProcess(const GenerativeProcess& psi, const ForcingSchedule& schedule,
                        uint64_t episode_seed, const SimOptions& opt) {
  const int n_sub = SubSteps(opt.dt, opt.out_interval);
  const int length = static_cast<int>(schedule.values.size());
  Require(length >= 1, "simulate: schedule is empty");
  const PolynomialDriver& drv = psi.driver;
  const int n_aux = static_cast<int>(psi.aux.vars.size());
  Require(n_aux == psi.graph.n_vars, "simulate: auxiliary system does not match graph");

  Episode e;
  e.system = "prior";
  e.process_ref = ProcessHash(psi);
  e.episode_seed = episode_seed;
  e.forcing_class = schedule.cls;
  e.dt = opt.dt;
  e.out_interval = opt.out_interval;
  e.schedule_params = schedule.params;
  e.names = {"z1", "z2"};
  for (int i = 0; i < n_aux; ++i) e.names.push_back("u" + std::to_string(i + 1));
  e.names.push_back("lambda_tilde");
  e.names.push_back("rdtc");
  Allocate(e, length);

  const CounterRng seed_rng(episode_seed);
  CounterRng xi_rng = seed_rng.Child("xi");
  CounterRng noise = seed_rng.Child("brownian");
  const double xi = xi_rng.Triangular(0.75, 1.0, 1.25);
  const double sigma_m = std::sqrt(2.0 * drv.recovery) * kDriverNoiseScale * xi;
  e.schedule_params.emplace_back("xi", xi);
  const double sqdt = std::sqrt(opt.dt);

  const int dim = 2 + n_aux;
  std::vector<double> x(static_cast<size_t>(dim), 0.0), f(static_cast<size_t>(dim));
  x[0] = drv.equilibrium[0];
  x[1] = drv.equilibrium[1];
  size_t max_in = 0;
  for (const auto& v : psi.aux.vars) max_in = std::max<size_t>(max_in, v.flow.in_dim);
  std::vector<double> in(max_in);

  auto step = [&](double lam) {
    const double p = drv.p0 + lam * (drv.p_crit - drv.p0);
    drv.Drift(x.data(), p, f.data());
    for (int i = 0; i < n_aux; ++i) {
      const AuxVariable& v = psi.aux.vars[i];
      size_t m = 0;
      for (int q : v.parents) in[m++] = x[2 + q];
      for (int ch : v.drivers) in[m++] = x[ch];
      f[2 + i] = (1.0 - v.eta) * v.flow.Eval(in.data()) - v.gamma * x[2 + i];
    }
    for (int j = 0; j < 2; ++j) x[j] += f[j] * opt.dt + sigma_m * sqdt * noise.Normal();
    for (int i = 0; i < n_aux; ++i) {
      x[2 + i] += f[2 + i] * opt.dt + psi.aux.vars[i].sigma * sqdt * noise.Normal();
    }
    return !Blown(x.data(), dim, opt.blowup);
  };
  auto record = [&](int k) {
    const double lam = schedule.values[k];
    const double tail[2] = {lam, 1.0 - lam};
    Recorder{&e}.Row(k, {std::span<const double>(x), std::span<const double>(tail)});
  };

  const long n_burn = std::lround(opt.burn_in / opt.dt);
  bool ok = true;
  for (long s = 0; s < n_burn && ok; ++s) {
    ok = step(WarmUp(schedule.values[0], (s + 1) * opt.dt, opt.burn_in));
  }
  if (ok) record(0);
  for (int k = 1; k < length && ok; ++k) {
    for (int j = 0; j < n_sub && ok; ++j) {
      ok = step(schedule.At((k - 1) + static_cast<double>(j) / n_sub));
    }
    if (ok) record(k);
    else e.invalid_step = k;
  }
  if (!ok) {
    e.valid = false;
    if (!e.invalid_step) e.invalid_step = 0;
  }
  e.t_crit = schedule.t_crit;
  e.tipped = schedule.t_crit.has_value();
  return e;
}

Episode SimulateSystem(SystemId id, const SystemParams& p, const ForcingSchedule& schedule,
                       uint64_t episode_seed, std::optional<SimOptions> opt_in) {
  const SystemInfo& info = GetSystemInfo(id);
  Require(p.system == id, "simulate: parameters belong to a different system");
  SimOptions opt;
  if (opt_in) {
    opt = *opt_in;
  } else {
    opt.dt = info.dt;
    opt.out_interval = info.out_interval;
    // r-protocols start far ahead of the transition; a long burn-in only
    // lets noise-driven escapes (Bautin) happen before recording begins.
    if (info.kind == TippingKind::kRate) opt.burn_in = 0.0;
  }
  const int n_sub = SubSteps(opt.dt, opt.out_interval);
  const int length = static_cast<int>(schedule.values.size());
  Require(length >= 1, "simulate: schedule is empty");
  const bool rate = info.kind == TippingKind::kRate;
  Require(rate || info.control_crit.has_value(), "simulate: b-system without critical value");
  const double t0 = rate ? schedule.Param("t0") : 0.0;

  Episode e;
  e.system = info.name;
  e.process_ref = info.name;
  e.episode_seed = episode_seed;
  e.forcing_class = schedule.cls;
  e.dt = opt.dt;
  e.out_interval = opt.out_interval;
  e.schedule_params = schedule.params;
  e.names = info.state_names;
  e.names.insert(e.names.end(), {"control", "observable", "lambda_tilde", "rdtc"});
  Allocate(e, length);

  // Raw control at fractional output position (negative = burn-in).
  auto control_at = [&](double pos) {
    if (rate) return RateControl(id, p, schedule, t0 + std::max(0.0, pos) * opt.out_interval);
    return info.control_start + schedule.At(pos) * (*info.control_crit - info.control_start);
  };
  auto burn_control = [&](double tau) {
    if (rate) return control_at(0.0);
    const double lam = WarmUp(schedule.values[0], tau, opt.burn_in);
    return info.control_start + lam * (*info.control_crit - info.control_start);
  };

  StateVector x;
  const double c_init = burn_control(0.0);
  if (id == SystemId::kRBautin) {
    // The rest state is the small stable cycle around the shifted origin.
    x = StateVector::Zero(2);
    x[0] = c_init + BautinRestRadius(p);
  } else {
    x = FindEquilibrium(id, p, c_init, info.initial_guess);
  }
  const StateVector amp = NoiseAmplitude(id, p);
  const int dim = info.dim;
  CounterRng noise = CounterRng(episode_seed).Child("brownian");
  const double sqdt = std::sqrt(opt.dt);
  std::vector<double> f(static_cast<size_t>(dim));

  auto step = [&](double c) {
    DriftInto(id, p, x.data(), c, f.data());
    for (int i = 0; i < dim; ++i) {
      x[i] += f[i] * opt.dt + (amp[i] != 0.0 ? amp[i] * sqdt * noise.Normal() : 0.0);
    }
    ProjectState(id, p, x.data(), c);
    return !Blown(x.data(), dim, opt.blowup);
  };
  std::vector<StateVector> traj;
  traj.reserve(static_cast<size_t>(length));
  auto record = [&](int k) {
    const double lam = schedule.values[k];
    const double tail[4] = {control_at(k), Observable(id, p, x), lam, 1.0 - lam};
    Recorder{&e}.Row(k, {std::span<const double>(x.data(), dim), std::span<const double>(tail)});
    traj.push_back(x);
  };

  const long n_burn = std::lround(opt.burn_in / opt.dt);
  bool ok = true;
  for (long s = 0; s < n_burn && ok; ++s) ok = step(burn_control((s + 1) * opt.dt));
  if (ok) record(0);
  for (int k = 1; k < length && ok; ++k) {
    for (int j = 0; j < n_sub && ok; ++j) ok = step(control_at((k - 1) + static_cast<double>(j) / n_sub));
    if (ok) record(k);
    else e.invalid_step = k;
  }
  if (!ok) {
    e.valid = false;
    if (!e.invalid_step) e.invalid_step = 0;
  }
  const auto tip = FirstTipIndex(id, p, traj);
  e.tipped = tip.has_value();
  if (rate) {
    if (schedule.cls == ForcingClass::kCritical && tip) e.t_crit = static_cast<int>(*tip);
  } else {
    e.t_crit = schedule.t_crit;
  }
  return e;
}

Episode SimulateValidationEpisode(SystemId id, const SystemParams& p, uint64_t episode_seed,
                                  std::optional<ForcingClass> cls, std::optional<int> length) {
  const SystemInfo& info = GetSystemInfo(id);
  const int len = length.value_or(info.length);
  CounterRng srng = CounterRng(episode_seed).Child("schedule");
  const ForcingSchedule s = info.kind == TippingKind::kRate
                                ? SampleRateSchedule(srng, id, p, len, cls)
                                : SampleValidationSchedule(srng, len, cls);
  return SimulateSystem(id, p, s, episode_seed);
}

EpisodeEnsemble SimulateEnsemble(const GenerativeProcess& psi, const CounterRng& rng, int k,
                                 int length, const SimOptions& opt) {
  Require(k >= 1, "ensemble: K must be >= 1");
  EpisodeEnsemble ens;
  ens.process_hash = ProcessHash(psi);
  for (int i = 0; i < k; ++i) {
    const uint64_t seed = DeriveSeed(rng.key(), "episode", static_cast<uint64_t>(i));
    CounterRng srng = CounterRng(seed).Child("schedule");
    const ForcingSchedule s = SampleTrainingSchedule(srng, length);
    Episode e = SimulateProcess(psi, s, seed, opt);
    if (e.valid) {
      ens.episodes.push_back(std::move(e));
    } else {
      ++ens.invalid_count;
    }
  }
  return ens;
}

std::string EpisodeToJsonl(const Episode& e) {
  std::string out;
  out.reserve(64 + e.columns.size() * static_cast<size_t>(e.length) * 24);
  out += "{\"system\":";
  AppendString(out, e.system);
  out += ",\"process_ref\":";
  AppendString(out, e.process_ref);
  out += ",\"episode_seed\":" + std::to_string(e.episode_seed);
  out += ",\"forcing_class\":";
  AppendString(out, ForcingClassName(e.forcing_class));
  out += ",\"dt\":";
  AppendNumber(out, e.dt);
  out += ",\"out_interval\":";
  AppendNumber(out, e.out_interval);
  out += ",\"length\":" + std::to_string(e.length);
  out += ",\"columns\":{";
  for (size_t c = 0; c < e.names.size(); ++c) {
    if (c) out += ',';
    AppendString(out, e.names[c]);
    out += ":[";
    for (size_t k = 0; k < e.columns[c].size(); ++k) {
      if (k) out += ',';
      AppendNumber(out, e.columns[c][k]);
    }
    out += ']';
  }
  out += "},\"tipped\":";
  out += e.tipped ? "true" : "false";
  out += ",\"t_crit\":";
  out += e.t_crit ? std::to_string(*e.t_crit) : "null";
  out += ",\"valid\":";
  out += e.valid ? "true" : "false";
  out += ",\"invalid_step\":";
  out += e.invalid_step ? std::to_string(*e.invalid_step) : "null";
  out += ",\"schedule\":{";
  for (size_t i = 0; i < e.schedule_params.size(); ++i) {
    if (i) out += ',';
    AppendString(out, e.schedule_params[i].first);
    out += ':';
    AppendNumber(out, e.schedule_params[i].second);
  }
  out += "}}";
  return out;
}

Episode EpisodeFromJson(std::string_view line) {
  Episode e;
  try {
    const Json doc = Json::parse(line);
    e.system = doc.at("system").get<std::string>();
    e.process_ref = doc.at("process_ref").get<std::string>();
    e.episode_seed = doc.at("episode_seed").get<uint64_t>();
    e.forcing_class = ForcingClassFromName(doc.at("forcing_class").get<std::string>());
    e.dt = doc.at("dt").get<double>();
    e.out_interval = doc.at("out_interval").get<double>();
    e.length = doc.at("length").get<int>();
    for (const auto& [name, arr] : doc.at("columns").items()) {
      if (!arr.is_array() || static_cast<int>(arr.size()) != e.length) {
        Fail(ErrorKind::kData, "episode column '" + name + "' does not match length");
      }
      std::vector<double> col;
      col.reserve(arr.size());
      for (const auto& v : arr) col.push_back(v.is_null() ? kNaN : v.get<double>());
      e.names.push_back(name);
      e.columns.push_back(std::move(col));
    }
    e.tipped = doc.at("tipped").get<bool>();
    if (!doc.at("t_crit").is_null()) e.t_crit = doc.at("t_crit").get<int>();
    e.valid = doc.at("valid").get<bool>();
    if (!doc.at("invalid_step").is_null()) e.invalid_step = doc.at("invalid_step").get<int>();
    if (doc.contains("schedule")) {
      for (const auto& [k, v] : doc.at("schedule").items()) {
        e.schedule_params.emplace_back(k, v.is_null() ? kNaN : v.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    Fail(ErrorKind::kData, std::string("episode json: ") + ex.what());
  }
  if (e.t_crit && (*e.t_crit < 0 || *e.t_crit >= std::max(1, e.length))) {
    Fail(ErrorKind::kData, "episode json: t_crit outside the episode");
  }
  return e;
}

}  // namespace tipbench
