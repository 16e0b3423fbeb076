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
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "tipbench/error.hpp"
#include "tipbench/eval.hpp"

using namespace tipbench;
using Catch::Approx;

namespace {

Episode SignalEpisode(const std::string& system, uint64_t seed, std::vector<double> signal,
                      ForcingClass cls, std::optional<int> t_crit) {
  Episode e;
  e.system = system;
  e.process_ref = system;
  e.episode_seed = seed;
  e.forcing_class = cls;
  e.length = static_cast<int>(signal.size());
  e.names = {"observable"};
  e.columns = {std::move(signal)};
  e.t_crit = t_crit;
  e.tipped = t_crit.has_value();
  return e;
}

std::vector<double> Ramp(int n, double offset = 0.0) {
  std::vector<double> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = offset + i;
  return v;
}

// Pairwise probability with half credit for ties.
double BruteAuroc(const std::vector<double>& s, const std::vector<uint8_t>& l) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!l[i]) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (l[j]) continue;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      den += 1.0;
    }
  }
  return num / den;
}

std::array<double, kNumQuantiles> UniformQuantiles(double shift = 0.0) {
  std::array<double, kNumQuantiles> q{};
  for (int j = 0; j < kNumQuantiles; ++j) q[j] = (j + 1) / 100.0 + shift;
  return q;
}

std::string PredictionHeader() {
  std::string h = "query_id,scope,position";
  char buf[8];
  for (int j = 1; j <= kNumQuantiles; ++j) {
    std::snprintf(buf, sizeof(buf), "q%03d", j);
    h += ',';
    h += buf;
  }
  return h + "\n";
}

std::string PredictionLine(const std::string& id, const std::string& scope, int pos, double base) {
  std::string s = id + "," + scope + "," + std::to_string(pos);
  for (int j = 0; j < kNumQuantiles; ++j) s += "," + std::to_string(base + 0.001 * (kNumQuantiles - j));
  return s + "\n";
}

}  // namespace

TEST_CASE("critical window placement") {
  const std::vector<Episode> eps = {
      SignalEpisode("sys", 1, Ramp(300), ForcingClass::kCritical, 200)};
  const std::vector<int> deltas = {30, 0};
  WindowReport rep;
  const auto w = BuildQueryWindows(eps, 128, deltas, 7, &rep);
  REQUIRE(w.size() == 2);
  CHECK(w[0].first == 42);
  CHECK(w[0].last == 169);
  CHECK(w[0].values.front() == 42.0);
  CHECK(w[0].values.size() == 128);
  CHECK(w[1].last == 199);
  CHECK(w[0].label);
  CHECK(w[0].query_id == "sys:1:w128:d30");
  CHECK(rep.critical_windows == 2);

  // Re-indexed serialization: times 0..W-1, values only.
  const std::string csv = WindowValuesCsv(w[0]);
  CHECK(csv.rfind("time,value\n0,42\n1,43\n", 0) == 0);
  CHECK(csv.find("\n127,169\n") != std::string::npos);
  CHECK(csv.find("sys") == std::string::npos);
}

TEST_CASE("windows that do not fit are skipped and reported") {
  const std::vector<Episode> eps = {
      SignalEpisode("sys", 1, Ramp(300), ForcingClass::kCritical, 100),
      SignalEpisode("sys", 2, Ramp(300), ForcingClass::kCritical, std::nullopt),
      SignalEpisode("sys", 3, Ramp(50), ForcingClass::kEquilibrium, std::nullopt)};
  const std::vector<int> deltas = {-10, 0, 10};
  WindowReport rep;
  const auto w = BuildQueryWindows(eps, 100, deltas, 7, &rep);
  // Episode 1 fits delta = -10 (steps 10..109) and delta = 0 (0..99).
  REQUIRE(w.size() == 2);
  CHECK(w[0].delta == -10);
  CHECK(w[1].first == 0);
  CHECK(rep.skipped_too_short == 1 + 3);
  CHECK(rep.skipped_no_tcrit == 3);
}

TEST_CASE("non-critical windows are deterministic and inside the episode") {
  std::vector<Episode> eps;
  for (uint64_t s = 0; s < 50; ++s) eps.push_back(SignalEpisode("sys", s, Ramp(400), ForcingClass::kFlat, std::nullopt));
  const std::vector<int> deltas = {-10, 0, 10, 20};
  const auto a = BuildQueryWindows(eps, 128, deltas, 11);
  const auto b = BuildQueryWindows(eps, 128, deltas, 11);
  const auto c = BuildQueryWindows(eps, 128, deltas, 12);
  REQUIRE(a.size() == 200);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].last == b[i].last);
    CHECK((a[i].first >= 0 && a[i].last <= 399));
    CHECK(a[i].last - a[i].first + 1 == 128);
    CHECK_FALSE(a[i].label);
    differs = differs || a[i].last != c[i].last;
  }
  CHECK(differs);
}

TEST_CASE("window bytes do not depend on later samples") {
  auto base = Ramp(300);
  auto altered = base;
  for (size_t t = 170; t < altered.size(); ++t) altered[t] = -1e6;
  const std::vector<Episode> a = {SignalEpisode("sys", 1, base, ForcingClass::kCritical, 200)};
  const std::vector<Episode> b = {SignalEpisode("sys", 1, altered, ForcingClass::kCritical, 200)};
  const std::vector<int> deltas = {30, 40};
  const auto wa = BuildQueryWindows(a, 128, deltas, 3);
  const auto wb = BuildQueryWindows(b, 128, deltas, 3);
  REQUIRE(wa.size() == wb.size());
  for (size_t i = 0; i < wa.size(); ++i) CHECK(WindowValuesCsv(wa[i]) == WindowValuesCsv(wb[i]));
}

TEST_CASE("short mode adaptation") {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  for (ShortMode m : {ShortMode::kPad, ShortMode::kBackfill, ShortMode::kResample}) {
    CHECK(ShortModeAdapt(x, 3, m) == x);
    CHECK(ShortModeFromName(ShortModeName(m)) == m);
  }
  CHECK(ShortModeAdapt(x, 5, ShortMode::kPad) == std::vector<double>{1, 2, 3, 3, 3});
  CHECK(ShortModeAdapt(x, 5, ShortMode::kBackfill) == std::vector<double>{1, 1, 1, 2, 3});
  CHECK(ShortModeAdapt(std::vector<double>{0.0, 1.0}, 3, ShortMode::kResample) ==
        std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS_AS(ShortModeAdapt(x, 0, ShortMode::kPad), Error);
  CHECK_THROWS_AS(ShortModeAdapt(std::vector<double>{}, 3, ShortMode::kPad), Error);
  CHECK_THROWS_AS(ShortModeFromName("ffill"), Error);
}

TEST_CASE("risk head examples") {
  CHECK(MapThreshold(0.05) == Approx(0.2449).margin(1e-4));
  const auto u = UniformQuantiles();
  CHECK(OneMinusMedian(u) == Approx(0.5).margin(1e-15));
  CHECK(OneMinusMean(u) == Approx(0.5).margin(1e-12));
  CHECK(CdfBelow(u, 0.3) == Approx(0.3).margin(1e-12));
  CHECK(CdfBelow(u, 0.005) == Approx(0.005).margin(1e-12));
  CHECK(CdfBelow(u, -1.0) == 0.0);
  CHECK(CdfBelow(u, 2.0) == 1.0);

  std::array<double, kNumQuantiles> flat;
  flat.fill(0.9);
  CHECK(CdfBelow(flat, MapThreshold(0.05)) == 0.0);
  CHECK(CdfBelow(flat, 0.95) == 1.0);
  CHECK(OneMinusMedian(flat) == Approx(0.1));
  CHECK(OneMinusMean(flat) == Approx(0.1).margin(1e-12));
  CHECK(OneMinusMean(flat, true) == Approx(0.1).margin(1e-12));

  const auto heads = RiskHeads(u);
  REQUIRE(heads.size() == 6);
  CHECK(heads[0].head == "1-median");
  CHECK(heads[1].head == "1-mean");
  CHECK(heads[2].head == "P(rdtc<0.05)");
  CHECK(heads[5].head == "P(rdtc<0.3)");
  CHECK(heads[2].score == Approx(MapThreshold(0.05)).margin(1e-12));
}

TEST_CASE("exponential tails integrate in closed form") {
  CounterRng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, kNumQuantiles> q{};
    double v = rng.Normal();
    for (double& x : q) x = v += 0.01 + 0.05 * rng.Uniform();
    // Midpoint rule on the extended quantile function.
    const double b_lo = (q[1] - q[0]) / std::log(2.0);
    const double b_hi = (q[98] - q[97]) / std::log(2.0);
    const int n = 2000000;
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
      const double p = (i + 0.5) / n * 0.01;
      lo += (q[0] - b_lo * std::log(0.01 / p)) * 0.01 / n;
      hi += (q[98] + b_hi * std::log(0.01 / p)) * 0.01 / n;
    }
    double mid = 0.0;
    for (int j = 0; j < 98; ++j) mid += 0.5 * (q[j] + q[j + 1]) * 0.01;
    CHECK(OneMinusMean(q, true) == Approx(1.0 - (lo + mid + hi)).margin(1e-6));
  }
}

TEST_CASE("shifting quantiles down never lowers a score") {
  CounterRng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<double, kNumQuantiles> q{};
    for (double& x : q) x = rng.Uniform(-0.2, 1.2);
    if (trial % 5 == 0) std::fill(q.begin() + 20, q.begin() + 60, 0.5);  // ties
    std::sort(q.begin(), q.end());
    auto shifted = q;
    const double d = rng.Uniform(0.0, 0.3);
    for (double& x : shifted) x -= d;
    for (bool exp_tails : {false, true}) {
      const auto a = RiskHeads(q, exp_tails), b = RiskHeads(shifted, exp_tails);
      for (size_t h = 0; h < a.size(); ++h) CHECK(b[h].score >= a[h].score - 1e-12);
    }
    // Larger thresholds give larger probabilities.
    for (size_t t = 0; t + 1 < kRiskThresholds.size(); ++t) {
      CHECK(CdfBelow(q, MapThreshold(kRiskThresholds[t])) <=
            CdfBelow(q, MapThreshold(kRiskThresholds[t + 1])));
    }
  }
}

TEST_CASE("quantile from bins") {
  const std::vector<double> one = {1.0}, b1 = {0.0, 1.0};
  CHECK(QuantileFromBins(one, b1, 0.5) == Approx(0.5));
  const std::vector<double> two = {0.5, 0.5}, b2 = {0.0, 1.0, 2.0};
  CHECK(QuantileFromBins(two, b2, 0.75) == Approx(1.5));
  CHECK_THROWS_AS(QuantileFromBins(two, b2, 0.0), Error);
  CHECK_THROWS_AS(QuantileFromBins(two, b2, 1.0), Error);

  // Dense CDF inversion oracle on an asymmetric three-bin histogram.
  const std::vector<double> logits = {0.3, -1.2, 1.1};
  const std::vector<double> p = Softmax(logits);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == Approx(1.0).margin(1e-15));
  const std::vector<double> b3 = {-1.0, 0.2, 0.5, 3.0};
  const int n = 1000000;
  const double h = (b3.back() - b3.front()) / n;
  for (double alpha : {0.05, 0.3, 0.41, 0.5, 0.77, 0.99}) {
    double cdf = 0.0, x = b3.front();
    size_t bin = 0;
    for (int i = 0; i < n && cdf < alpha; ++i) {
      const double mid = b3.front() + (i + 0.5) * h;
      while (mid > b3[bin + 1]) ++bin;
      cdf += p[bin] / (b3[bin + 1] - b3[bin]) * h;
      x = b3.front() + (i + 1) * h;
    }
    CHECK(QuantileFromBins(p, b3, alpha) == Approx(x).margin(2.0 * h));
  }
  // Empty bin: the 1e-12 floor keeps the division finite.
  const std::vector<double> gap = {0.5, 0.0, 0.5};
  CHECK(std::isfinite(QuantileFromBins(gap, b3, 0.5)));
}

TEST_CASE("auroc examples") {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<uint8_t> l = {0, 0, 1, 1};
  CHECK(Auroc(s, l) == Approx(0.75).margin(1e-15));
  CHECK(Auroc(std::vector<double>{1, 2, 3, 4}, l) == 1.0);
  CHECK(Auroc(std::vector<double>{5, 5, 5, 5}, l) == 0.5);
  CHECK_THROWS_AS(Auroc(s, std::vector<uint8_t>{1, 1, 1, 1}), Error);
}

TEST_CASE("auroc matches the pairwise definition") {
  CounterRng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(499));
    const int levels = 1 + static_cast<int>(rng.Below(30));
    std::vector<double> s(static_cast<size_t>(n));
    std::vector<uint8_t> l(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.Below(static_cast<uint64_t>(levels)));
      l[i] = rng.Bernoulli(0.3) ? 1 : 0;
    }
    l[0] = 1;
    l[1] = 0;
    CHECK(Auroc(s, l) == Approx(BruteAuroc(s, l)).margin(1e-12));
    std::vector<uint8_t> flipped(l.size());
    for (size_t i = 0; i < l.size(); ++i) flipped[i] = l[i] ? 0 : 1;
    CHECK(Auroc(s, l) + Auroc(s, flipped) == Approx(1.0).margin(1e-12));
    // Trapezoidal area under the ROC curve equals the midrank AUROC.
    const auto roc = RocCurve(s, l);
    double area = 0.0;
    for (size_t i = 1; i < roc.size(); ++i) area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2;
    CHECK(area == Approx(Auroc(s, l)).margin(1e-12));
    CHECK(roc.back().fpr == 1.0);
    CHECK(roc.back().tpr == 1.0);
  }
}

TEST_CASE("balanced auroc") {
  CounterRng rng(4);
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<uint8_t> l = {0, 0, 1, 1};
  const auto r = BalancedAuroc(rng, s, l);
  CHECK(r.mean == Auroc(s, l));
  CHECK(r.std == 0.0);
  CHECK(r.n_pos == 2);

  const std::vector<double> sep = {1, 2, 3, 10, 11, 12, 13, 14};
  const std::vector<uint8_t> sl = {0, 0, 0, 1, 1, 1, 1, 1};
  CHECK(BalancedAuroc(rng, sep, sl).mean == 1.0);
  CHECK_THROWS_AS(BalancedAuroc(rng, sep, std::vector<uint8_t>(8, 0)), Error);
}

TEST_CASE("balanced auroc against exhaustive subsample enumeration") {
  // 6 positives, 3 negatives: every 3-subset of the positives.
  const std::vector<double> pos = {0.2, 0.5, 0.55, 0.7, 0.9, 0.3};
  const std::vector<double> neg = {0.25, 0.6, 0.1};
  std::vector<double> all_aucs;
  for (int a = 0; a < 6; ++a) {
    for (int b = a + 1; b < 6; ++b) {
      for (int c = b + 1; c < 6; ++c) {
        std::vector<double> s = {pos[a], pos[b], pos[c], neg[0], neg[1], neg[2]};
        all_aucs.push_back(BruteAuroc(s, {1, 1, 1, 0, 0, 0}));
      }
    }
  }
  REQUIRE(all_aucs.size() == 20);
  const double exh_mean = std::accumulate(all_aucs.begin(), all_aucs.end(), 0.0) / 20;
  double ss = 0.0;
  for (double v : all_aucs) ss += (v - exh_mean) * (v - exh_mean);
  const double exh_sd = std::sqrt(ss / 20);

  std::vector<double> s(pos);
  s.insert(s.end(), neg.begin(), neg.end());
  const std::vector<uint8_t> l = {1, 1, 1, 1, 1, 1, 0, 0, 0};
  const double full = BruteAuroc(s, l);
  CHECK(exh_mean == Approx(full).margin(1e-12));

  CounterRng rng(5);
  const auto r = BalancedAuroc(rng, s, l, 10);
  CHECK(std::abs(r.mean - full) <= 3.0 * exh_sd / std::sqrt(10.0));
  CHECK(r.std <= 1.0);
  const auto big = BalancedAuroc(rng, s, l, 20000);
  CHECK(big.mean == Approx(full).margin(0.005));
  CHECK(big.std == Approx(exh_sd).margin(0.005));
}

TEST_CASE("standard errors") {
  CHECK(HanleyMcNeilSe(0.8, 407) == Approx(0.0198).margin(1e-4));
  CHECK(HanleyMcNeilSe(0.5, 100) == Approx(0.05).margin(1e-15));
  CHECK(HanleyMcNeilSe(1.0, 10) == 0.0);
  CHECK_THROWS_AS(HanleyMcNeilSe(0.5, 0), Error);
  CHECK(BalancedSubsampleSe(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK(BalancedSubsampleSe(std::vector<double>{0.1}) == Approx(0.0316).margin(1e-4));
  CHECK(BalancedSubsampleSe(std::vector<double>{0.1, 0.2}) == Approx(0.0354).margin(1e-4));
  CHECK_THROWS_AS(BalancedSubsampleSe(std::vector<double>{}), Error);
}

TEST_CASE("macro auroc over lead times") {
  // Balanced 5/5 cells. Positives all score 0.5; negatives place k of 5
  // below, so the cell AUROC is k / 5.
  ScoreTable t;
  auto add_cell = [&](const std::string& sys, int delta, int below) {
    for (int i = 0; i < 5; ++i) {
      t.push_back({sys + "p" + std::to_string(delta) + "_" + std::to_string(i), "m", 0.5, true, delta, 128, sys});
      t.push_back({sys + "n" + std::to_string(delta) + "_" + std::to_string(i), "m", i < below ? 0.1 : 0.9,
                   false, delta, 128, sys});
    }
  };
  add_cell("A", -10, 0);
  add_cell("A", 0, 1);
  add_cell("A", 10, 3);
  add_cell("A", 20, 4);
  const Report pos = MacroAuroc(t, true, 1);
  auto find = [](const Report& r, const std::string& sys) {
    for (const MacroResult& m : r.macro) {
      if (m.system == sys) return m;
    }
    FAIL("missing row " << sys);
    return MacroResult{};
  };
  const MacroResult a = find(pos, "A");
  REQUIRE(a.auroc);
  CHECK(*a.auroc == Approx(0.7).margin(1e-12));
  CHECK(a.cells == 2);
  CHECK(a.se_bs == 0.0);
  CHECK(a.n_min_pooled == 10);
  CHECK(a.se_hm == Approx(std::sqrt(0.7 * 0.3 / 10)).margin(1e-12));
  const MacroResult every = find(MacroAuroc(t, false, 1), "A");
  CHECK(*every.auroc == Approx((0.0 + 0.2 + 0.6 + 0.8) / 4).margin(1e-12));

  // Single-delta table: macro equals the cell.
  ScoreTable single(t.begin() + 20, t.begin() + 30);
  CHECK(*find(MacroAuroc(single, true, 1), "A").auroc == Approx(0.6).margin(1e-12));

  // A second system with a single-class cell and the summary row.
  add_cell("B", 10, 5);
  t.push_back({"Bonly", "m", 0.3, true, 20, 128, "B"});
  const Report r = MacroAuroc(t, true, 1);
  const MacroResult b = find(r, "B");
  CHECK(*b.auroc == 1.0);
  CHECK(b.missing_cells == 1);
  const MacroResult all = find(r, std::string(kAllDatasets));
  CHECK(*all.auroc == Approx((0.7 + 1.0) / 2).margin(1e-12));
  CHECK(MacroWideCsv(r).find("All datasets,0.850000,") != std::string::npos);
  CHECK(CellsCsv(r).find("B,m,20,NA,NA,NA,NA") != std::string::npos);
}

TEST_CASE("macro auroc is reproducible and order independent") {
  CounterRng rng(6);
  ScoreTable t;
  for (int i = 0; i < 300; ++i) {
    const bool label = i % 3 == 0;
    t.push_back({"q" + std::to_string(i), i % 2 ? "m1" : "m2", rng.Normal() + (label ? 0.5 : 0.0), label,
                 10 * static_cast<int>(rng.Below(3)), 64, i % 5 ? "S" : "T"});
  }
  ScoreTable shuffled = t;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(MacroLongCsv(MacroAuroc(t, true, 9)) == MacroLongCsv(MacroAuroc(shuffled, true, 9)));
  CHECK(CellsCsv(MacroAuroc(t, false, 9)) == CellsCsv(MacroAuroc(t, false, 9)));
  CHECK(CellsCsv(MacroAuroc(t, false, 9)) != CellsCsv(MacroAuroc(t, false, 10)));
}

TEST_CASE("score table CSV round trip") {
  ScoreTable t = {{"a:1:w8:d0", "dews:w8:var_tau", 0.25, true, 0, 8, "a"},
                  {"a:2:w8:d0", "dews:w8:var_tau", std::numeric_limits<double>::quiet_NaN(), false, 0, 8, "a"}};
  const std::string csv = ScoreTableCsv(t);
  CHECK(csv.find(",NA,") != std::string::npos);
  const ScoreTable back = ParseScoreTableCsv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].score == 0.25);
  CHECK(std::isnan(back[1].score));
  CHECK(ScoreTableCsv(back) == csv);
  CHECK_THROWS_AS(ParseScoreTableCsv("bad header\n"), Error);
  CHECK_THROWS_AS(ParseScoreTableCsv("query_id,method,score,label,delta,window_len,system\nq,m,x,1,0,8,s\n"), Error);
  CHECK_THROWS_AS(ParseScoreTableCsv("query_id,method,score,label,delta,window_len,system\nq,m,0.5,2,0,8,s\n"), Error);
}

TEST_CASE("ews scoring marks undefined trends as missing") {
  std::vector<Episode> eps = {SignalEpisode("s", 1, std::vector<double>(200, 1.0), ForcingClass::kCritical, 150),
                              SignalEpisode("s", 2, Ramp(200), ForcingClass::kEquilibrium, std::nullopt)};
  const std::vector<int> deltas = {0};
  const auto w = BuildQueryWindows(eps, 64, deltas, 1);
  const std::vector<Indicator> inds = {Indicator::kVar, Indicator::kAr1};
  const ScoreTable t = ScoreEws(w, inds);
  REQUIRE(t.size() == 4);
  CHECK(t[0].method == "dews:w64:var_tau");
  CHECK(t[0].score == 0.0);          // constant variance series: tied, tau 0
  CHECK(std::isnan(t[1].score));     // ar1 undefined everywhere
  CHECK_FALSE(std::isnan(t[3].score));
}

TEST_CASE("prediction ingestion") {
  std::vector<Episode> eps = {SignalEpisode("s", 1, Ramp(300), ForcingClass::kCritical, 250),
                              SignalEpisode("s", 2, Ramp(300), ForcingClass::kFlat, std::nullopt)};
  const std::vector<int> deltas = {10};
  const auto w = BuildQueryWindows(eps, 64, deltas, 1);
  REQUIRE(w.size() == 2);
  const std::string ok = PredictionHeader() + PredictionLine(w[0].query_id, "nowcast", 63, 0.1) +
                         PredictionLine(w[0].query_id, "forecast", 191, 0.05) +
                         PredictionLine(w[1].query_id, "nc", 63, 0.6);
  const auto preds = ParsePredictionsCsv(ok);
  REQUIRE(preds.size() == 3);
  CHECK(std::is_sorted(preds[0].values.begin(), preds[0].values.end()));
  const ScoreTable t = ScorePredictions(w, preds, "tippfn");
  CHECK(t.size() == 18);
  CHECK(t[0].method == "tippfn:nc:1-median");
  CHECK(t[6].method == "tippfn:fc:1-median");
  CHECK(t[0].score > t[12].score);  // the critical window looks riskier

  // Malformed inputs are reported with line numbers.
  auto message = [](const std::string& text) {
    try {
      ParsePredictionsCsv(text);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("query_id,scope\n").find("line 1") != std::string::npos);
  CHECK(message(PredictionHeader() + "x,nc,63,0.1\n").find("line 2") != std::string::npos);
  std::string bad_scope = PredictionLine("x", "later", 63, 0.1);
  CHECK(message(PredictionHeader() + bad_scope).find("scope") != std::string::npos);
  std::string bad_value = PredictionLine("x", "nc", 63, 0.1);
  bad_value.replace(bad_value.rfind(','), std::string::npos, ",abc\n");
  CHECK(message(PredictionHeader() + PredictionLine("y", "nc", 63, 0.1) + bad_value).find("line 3") !=
        std::string::npos);

  // Semantic checks.
  CHECK_THROWS_AS(ScorePredictions(w, ParsePredictionsCsv(PredictionHeader() +
                                                          PredictionLine(w[0].query_id, "nc", 62, 0.1) +
                                                          PredictionLine(w[1].query_id, "nc", 63, 0.1)),
                                   "m"),
                  Error);
  CHECK_THROWS_AS(ScorePredictions(w, ParsePredictionsCsv(PredictionHeader() +
                                                          PredictionLine(w[0].query_id, "fc", 63, 0.1) +
                                                          PredictionLine(w[1].query_id, "nc", 63, 0.1)),
                                   "m"),
                  Error);
  CHECK_THROWS_AS(ScorePredictions(w, ParsePredictionsCsv(PredictionHeader() +
                                                          PredictionLine(w[0].query_id, "nc", 63, 0.1)),
                                   "m"),
                  Error);
  CHECK_THROWS_AS(ScorePredictions(w, ParsePredictionsCsv(PredictionHeader() +
                                                          PredictionLine(w[0].query_id, "nc", 63, 0.1) +
                                                          PredictionLine(w[0].query_id, "nc", 63, 0.2) +
                                                          PredictionLine(w[1].query_id, "nc", 63, 0.1)),
                                   "m"),
                  Error);
  CHECK_THROWS_AS(ScorePredictions(w, ParsePredictionsCsv(PredictionHeader() +
                                                          PredictionLine("nope", "nc", 63, 0.1)),
                                   "m"),
                  Error);
}

TEST_CASE("roc csv") {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<uint8_t> l = {0, 0, 1, 1};
  const std::string csv = RocCsv(RocCurve(s, l));
  CHECK(csv.rfind("fpr,tpr,threshold\n0,0,inf\n", 0) == 0);
  CHECK(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')) == 6);
}
