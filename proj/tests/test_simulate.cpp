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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "catch_amalgamated.hpp"
#include "tipbench/error.hpp"
#include "tipbench/ews.hpp"
#include "tipbench/simulate.hpp"

using namespace tipbench;
using Catch::Approx;

namespace {

// Driver-only process: no auxiliary variables, the given coefficients and a
// fixed control (bif_param_index 0 with p0 = p_crit).
GenerativeProcess DriverOnly(const Coefficients& c, double x0, double y0, double recovery) {
  GenerativeProcess psi;
  psi.driver.coeffs = c;
  psi.driver.equilibrium = StateVector::Zero(2);
  psi.driver.equilibrium << x0, y0;
  psi.driver.recovery = recovery;
  psi.driver.bif_param_index = 0;
  psi.driver.p0 = c[0];
  psi.driver.p_crit = c[0];
  psi.graph.n_vars = 0;
  psi.graph.n_hidden = 0;
  return psi;
}

ForcingSchedule Flat(int length, double level = 0.0) {
  ForcingSchedule s;
  s.cls = ForcingClass::kConstant;
  s.values.assign(static_cast<size_t>(length), level);
  return s;
}

double Variance(std::span<const double> v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / (v.size() - 1);
}

}  // namespace

TEST_CASE("training schedule examples") {
  CounterRng rng(1);
  bool seen_ramp = false, seen_const = false, seen_bezier = false;
  for (int i = 0; i < 2000; ++i) {
    const ForcingSchedule s = SampleTrainingSchedule(rng, 100);
    REQUIRE(s.values.size() == 100);
    CHECK(s.values[0] == 0.0);
    switch (s.cls) {
      case ForcingClass::kConstant:
        seen_const = true;
        for (double v : s.values) CHECK(1.0 - v == 1.0);
        break;
      case ForcingClass::kRampAndHold: {
        seen_ramp = true;
        const double h = s.Param("h"), level = s.Param("L");
        const double t_hold = h * 99;
        CHECK(s.values[static_cast<size_t>(std::ceil(t_hold))] == level);
        CHECK(s.values[static_cast<size_t>(std::floor(t_hold))] >= level * (1.0 - 1.0 / t_hold));
        CHECK(s.values[99] == level);
        break;
      }
      case ForcingClass::kBezierAndHold: {
        seen_bezier = true;
        const double level = s.Param("L");
        CHECK(s.values[99] == level);
        const int n_c = static_cast<int>(s.Param("n_c"));
        CHECK((n_c >= 3 && n_c <= 6));
        for (int j = 1; j < n_c - 1; ++j) {
          const double c = s.Param("c" + std::to_string(j));
          CHECK((c >= 0.1 * level - 1e-12 && c <= 0.9 * level + 1e-12));
        }
        break;
      }
      default:
        FAIL("unexpected class");
    }
    if (s.t_crit) CHECK(s.values[*s.t_crit] >= 1.0);
  }
  CHECK((seen_ramp && seen_const && seen_bezier));
}

TEST_CASE("bezier evaluation") {
  const std::vector<double> c = {0.0, 0.3, 1.0, 1.0};
  CHECK(BezierEval(c, 0.0) == 0.0);
  CHECK(BezierEval(c, 1.0) == 1.0);
  // Bernstein form of a cubic.
  const double s = 0.3, t = 1 - s;
  CHECK(BezierEval(c, s) == Approx(3 * t * t * s * 0.3 + 3 * t * s * s + s * s * s).epsilon(1e-14));
}

TEST_CASE("training mixture frequencies") {
  CounterRng rng(2);
  std::map<ForcingClass, int> n;
  for (int i = 0; i < 10000; ++i) ++n[SampleTrainingSchedule(rng, 20).cls];
  CHECK((n[ForcingClass::kBezierAndHold] >= 3800 && n[ForcingClass::kBezierAndHold] <= 4200));
  CHECK((n[ForcingClass::kRampAndHold] >= 3800 && n[ForcingClass::kRampAndHold] <= 4200));
  CHECK((n[ForcingClass::kConstant] >= 1800 && n[ForcingClass::kConstant] <= 2200));
}

TEST_CASE("validation class frequencies") {
  CounterRng rng(3);
  std::map<ForcingClass, int> n;
  for (int i = 0; i < 10000; ++i) ++n[SampleValidationSchedule(rng, 20).cls];
  CHECK((n[ForcingClass::kCritical] >= 4800 && n[ForcingClass::kCritical] <= 5200));
  for (ForcingClass c : {ForcingClass::kApproaching, ForcingClass::kReceding, ForcingClass::kFlat,
                         ForcingClass::kEquilibrium}) {
    CHECK((n[c] >= 1000 && n[c] <= 1500));
  }
}

TEST_CASE("validation schedule examples") {
  CounterRng rng(4);
  for (int i = 0; i < 200; ++i) {
    const ForcingSchedule eq = SampleValidationSchedule(rng, 400, ForcingClass::kEquilibrium);
    for (double v : eq.values) CHECK(1.0 - v == 1.0);

    const ForcingSchedule cr = SampleValidationSchedule(rng, 400, ForcingClass::kCritical);
    REQUIRE(cr.t_crit);
    const int tc = *cr.t_crit;
    CHECK(tc == static_cast<int>(cr.Param("t_c")));
    CHECK(1.0 - cr.values[tc] == 0.0);
    for (int k = tc; k < 400; ++k) CHECK(1.0 - cr.values[k] == 0.0);
    for (int k = 0; k < tc; ++k) CHECK(cr.values[k] < 1.0);

    const ForcingSchedule ap = SampleValidationSchedule(rng, 400, ForcingClass::kApproaching);
    const double eps = ap.Param("epsilon");
    double min_rdtc = 1.0;
    for (double v : ap.values) min_rdtc = std::min(min_rdtc, 1.0 - v);
    CHECK(min_rdtc == Approx(eps).margin(1e-12));
    CHECK_FALSE(ap.t_crit);

    const ForcingSchedule rc = SampleValidationSchedule(rng, 400, ForcingClass::kReceding);
    CHECK(rc.values.front() < 1.0);
    CHECK(rc.values.back() < rc.values.front());

    const ForcingSchedule fl = SampleValidationSchedule(rng, 400, ForcingClass::kFlat);
    const double l0 = fl.Param("lambda0");
    for (double v : fl.values) CHECK(std::abs(v - l0) < 0.1 * l0);
  }
  CHECK_THROWS_AS(SampleValidationSchedule(rng, 100, ForcingClass::kRampAndHold), Error);
  CHECK_THROWS_AS(SampleValidationSchedule(rng, 1), Error);
}

TEST_CASE("critical schedule at three quarters of the episode") {
  // Search the stream for a draw with t_c = 0.75 length.
  CounterRng rng(5);
  bool found = false;
  for (int i = 0; i < 5000 && !found; ++i) {
    const ForcingSchedule s = SampleValidationSchedule(rng, 101, ForcingClass::kCritical);
    if (*s.t_crit != 75) continue;
    found = true;
    CHECK(1.0 - s.values[75] == 0.0);
    CHECK(1.0 - s.values[100] == 0.0);
    CHECK(1.0 - s.values[74] > 0.0);
  }
  CHECK(found);
}

TEST_CASE("rdtc transform") {
  CHECK(RdtcTransform(0.0) == 0.0);
  CHECK(RdtcTransform(1.0) == Approx(0.9999092).margin(1e-7));
  CHECK(RdtcTransform(0.049) == Approx(std::tanh(0.245)).margin(1e-12));
  CHECK(RdtcTransform(0.049) == Approx(0.2405).margin(5e-4));
  CHECK(RdtcTransform(0.049) < 0.245);
}

TEST_CASE("zero-noise fold converges to the stable root") {
  Coefficients c{};
  c[0] = 1.0;                  // mu
  c[3] = -1.0;                 // -x^2
  c[kNumMonomials + 2] = -1.0;  // y decays
  const GenerativeProcess psi = DriverOnly(c, 0.5, 0.0, 0.0);
  SimOptions opt;
  opt.burn_in = 0.0;
  const Episode e = SimulateProcess(psi, Flat(21), 1, opt);
  REQUIRE(e.valid);
  CHECK(e.Column("z1")[0] == 0.5);
  CHECK(std::abs(e.Column("z1")[20] - 1.0) < 1e-6);
}

TEST_CASE("zero noise and zero drift keep the state") {
  const GenerativeProcess psi = DriverOnly(Coefficients{}, 0.3, -0.2, 0.0);
  const Episode e = SimulateProcess(psi, Flat(50), 2);
  for (double v : e.Column("z1")) CHECK(v == 0.3);
  for (double v : e.Column("z2")) CHECK(v == -0.2);
}

TEST_CASE("Ornstein-Uhlenbeck stationary variance") {
  // dz = -z dt + sigma dW with sigma = sqrt(2 r) 0.01 xi and r = 1.
  Coefficients c{};
  c[1] = -1.0;
  c[kNumMonomials + 2] = -1.0;
  const GenerativeProcess psi = DriverOnly(c, 0.0, 0.0, 1.0);
  const Episode e = SimulateProcess(psi, Flat(100000), 3);
  double xi = 0.0;
  for (const auto& [k, v] : e.schedule_params) {
    if (k == "xi") xi = v;
  }
  REQUIRE(xi >= 0.75);
  const double sigma = std::sqrt(2.0) * 0.01 * xi;
  CHECK(Variance(e.Column("z1")) == Approx(sigma * sigma / 2.0).epsilon(0.05));
  CHECK(Variance(e.Column("z2")) == Approx(sigma * sigma / 2.0).epsilon(0.05));
}

TEST_CASE("rdtc identity holds on every generated episode") {
  const GenerativeProcess psi = SampleProcess(17);
  const EpisodeEnsemble ens = SimulateEnsemble(psi, CounterRng(8), kEpisodesPerEnsemble, 100);
  std::vector<Episode> all = ens.episodes;
  for (SystemId id : AllSystems()) {
    all.push_back(SimulateValidationEpisode(id, DefaultParams(id), DeriveSeed(9, SystemName(id)),
                                            std::nullopt, 200));
  }
  for (const Episode& e : all) {
    INFO(e.system);
    const auto& lam = e.Column("lambda_tilde");
    const auto& rd = e.Column("rdtc");
    REQUIRE(lam.size() == static_cast<size_t>(e.length));
    for (size_t t = 0; t < lam.size(); ++t) {
      if (std::isnan(lam[t])) continue;
      CHECK(rd[t] == 1.0 - lam[t]);
    }
    for (const auto& col : e.columns) CHECK(col.size() == static_cast<size_t>(e.length));
  }
}

TEST_CASE("ensembles share the process and differ in noise") {
  const GenerativeProcess psi = SampleProcess(21);
  const EpisodeEnsemble ens = SimulateEnsemble(psi, CounterRng(22), kEpisodesPerEnsemble, 60);
  CHECK(ens.episodes.size() + ens.invalid_count == 6);
  for (const Episode& e : ens.episodes) CHECK(e.process_ref == ens.process_hash);

  ForcingSchedule s = Flat(60);
  const Episode a = SimulateProcess(psi, s, 100);
  const Episode b = SimulateProcess(psi, s, 101);
  const Episode a2 = SimulateProcess(psi, s, 100);
  CHECK(a.Column("z1") != b.Column("z1"));
  CHECK(a.Column("z1") == a2.Column("z1"));
  CHECK(a.Column("u1") == a2.Column("u1"));
}

TEST_CASE("halving dt leaves the terminal mean within three standard errors") {
  const SystemParams p = DefaultParams(SystemId::kBFold);
  ForcingSchedule s = Flat(30, 0.5);
  auto terminal = [&](double dt, uint64_t base) {
    std::vector<double> v;
    SimOptions opt;
    opt.dt = dt;
    for (uint64_t i = 0; i < 200; ++i) {
      v.push_back(SimulateSystem(SystemId::kBFold, p, s, DeriveSeed(base, "em", i), opt).Column("x").back());
    }
    return v;
  };
  const auto a = terminal(0.01, 1), b = terminal(0.005, 2);
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / 200;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / 200;
  const double se = std::sqrt(Variance(a) / 200 + Variance(b) / 200);
  CHECK(std::abs(ma - mb) < 3.0 * se);
}

TEST_CASE("variance rises before the fold") {
  const SystemParams p = DefaultParams(SystemId::kBFold);
  int rises = 0, n = 0;
  for (uint64_t i = 0; i < 60; ++i) {
    const Episode e = SimulateValidationEpisode(SystemId::kBFold, p, DeriveSeed(31, "csd", i),
                                                ForcingClass::kCritical);
    REQUIRE(e.t_crit);
    const int tc = *e.t_crit;
    if (tc < 80) continue;
    const auto& x = e.Column("x");
    const std::vector<double> pre(x.begin(), x.begin() + tc);
    const auto roll = RollingIndicator(pre, 20, Indicator::kVar);
    const size_t q = roll.size() / 4;
    const double first = std::accumulate(roll.begin(), roll.begin() + q, 0.0) / q;
    const double last = std::accumulate(roll.end() - q, roll.end(), 0.0) / q;
    rises += last > first;
    ++n;
  }
  REQUIRE(n >= 50);
  // One-sided sign test: Pr(Bin(n, 1/2) >= rises) < 0.01.
  double tail = 0.0;
  for (int k = rises; k <= n; ++k) tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                                    std::lgamma(n - k + 1.0) - n * std::log(2.0));
  CHECK(tail < 0.01);
}

TEST_CASE("blow-up flags the episode") {
  Coefficients c{};
  c[1] = 5.0;  // dz1 = 5 z1
  c[kNumMonomials + 2] = -1.0;
  const GenerativeProcess psi = DriverOnly(c, 1.0, 0.0, 0.0);
  SimOptions opt;
  opt.burn_in = 0.0;
  const Episode e = SimulateProcess(psi, Flat(100), 4, opt);
  CHECK_FALSE(e.valid);
  REQUIRE(e.invalid_step);
  CHECK(*e.invalid_step > 0);
  CHECK(*e.invalid_step < 100);
}

TEST_CASE("episode JSON round trip") {
  const Episode e = SimulateValidationEpisode(SystemId::kBHopf, DefaultParams(SystemId::kBHopf), 77,
                                              ForcingClass::kCritical, 50);
  const std::string line = EpisodeToJsonl(e);
  CHECK(line.find('\n') == std::string::npos);
  const Episode r = EpisodeFromJson(line);
  CHECK(EpisodeToJsonl(r) == line);
  CHECK(r.columns == e.columns);
  CHECK(r.t_crit == e.t_crit);
  CHECK(r.forcing_class == e.forcing_class);
  CHECK_THROWS_AS(EpisodeFromJson("{}"), Error);
}
