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
#include <set>
#include <vector>

#include "catch_amalgamated.hpp"
#include "tipbench/error.hpp"
#include "tipbench/taskgen.hpp"

using namespace tipbench;
using Catch::Approx;

namespace {

// Synthetic prior-shaped episode with deterministic pseudo-random columns.
Episode FakeEpisode(uint64_t seed, int length = 400) {
  Episode e;
  e.system = "prior";
  e.process_ref = "psi-test";
  e.episode_seed = seed;
  e.length = length;
  e.names = {"z1", "z2"};
  for (int i = 1; i <= 14; ++i) e.names.push_back("u" + std::to_string(i));
  e.names.push_back("lambda_tilde");
  e.names.push_back("rdtc");
  CounterRng rng(seed);
  for (size_t c = 0; c + 2 < e.names.size(); ++c) {
    std::vector<double> col(static_cast<size_t>(length));
    for (double& v : col) v = rng.Normal() * (1.0 + c) + c;
    e.columns.push_back(std::move(col));
  }
  std::vector<double> lam(static_cast<size_t>(length)), rd(static_cast<size_t>(length));
  for (int t = 0; t < length; ++t) {
    lam[t] = std::min(1.0, t / (0.7 * length));
    rd[t] = 1.0 - lam[t];
  }
  e.columns.push_back(lam);
  e.columns.push_back(rd);
  return e;
}

std::vector<Episode> FakeEnsemble(uint64_t seed, int k = 6) {
  std::vector<Episode> v;
  for (int i = 0; i < k; ++i) v.push_back(FakeEpisode(DeriveSeed(seed, "ep", i)));
  return v;
}

}  // namespace

TEST_CASE("context count frequencies") {
  const auto ens = FakeEnsemble(1);
  std::array<int, 4> n{};
  CounterRng rng(2);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++n[PartitionEpisodes(rng, ens).context.size()];
  for (int c = 0; c < 4; ++c) CHECK(n[c] / static_cast<double>(draws) == Approx(kNctxProbs[c]).margin(0.01));
}

TEST_CASE("partition budgets") {
  const auto ens = FakeEnsemble(3);
  CounterRng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const Partition p = PartitionEpisodes(rng, ens);
    const int n = static_cast<int>(p.context.size());
    int total = 0;
    for (int r : p.context_rows) {
      CHECK((r >= kContextMinRows && r <= kContextMaxRows));
      total += r;
    }
    if (n > 0) CHECK((total >= kContextBudget[n][0] && total <= kContextBudget[n][1]));
    if (n == 3) CHECK((total >= 276 && total <= 320));
    CHECK(p.query_rows == kQueryTargetRows);
    CHECK(total + p.query_rows <= kMaxRows);
    CHECK(std::find(p.context.begin(), p.context.end(), p.query) == p.context.end());
    CHECK(std::set<int>(p.context.begin(), p.context.end()).size() == p.context.size());
  }
}

TEST_CASE("single-episode ensemble forces zero context") {
  const std::vector<Episode> one = {FakeEpisode(5)};
  CounterRng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Partition p = PartitionEpisodes(rng, one);
    CHECK(p.query == 0);
    CHECK(p.context.empty());
  }
  CHECK_THROWS_AS(PartitionEpisodes(rng, std::span<const Episode>()), Error);
  const auto ens = FakeEnsemble(7);
  CHECK(PartitionEpisodes(rng, ens, true).context.empty());
}

TEST_CASE("stratified jitter") {
  CounterRng rng(8);
  std::vector<int> id(50);
  for (int i = 0; i < 50; ++i) id[i] = i;
  CHECK(StratifiedJitter(rng, 50, 50) == id);
  CHECK(StratifiedJitter(rng, 50, 2) == std::vector<int>{0, 49});
  CHECK_THROWS_AS(StratifiedJitter(rng, 5, 6), Error);
  // Strata of width 98 / 8 over the interior 1..98.
  const double w = 98.0 / 8.0;
  for (int i = 0; i < 10000; ++i) {
    const auto idx = StratifiedJitter(rng, 100, 10);
    REQUIRE(idx.size() == 10);
    CHECK(idx.front() == 0);
    CHECK(idx.back() == 99);
    for (int j = 0; j < 8; ++j) {
      const int v = idx[j + 1];
      CHECK(v >= 1.0 + j * w - 1e-9);
      CHECK(v < 1.0 + (j + 1) * w);
    }
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
  }
}

TEST_CASE("column selection") {
  double z = 0.0;
  for (double r : kRhoAct) z += r;
  // Normalizer of the printed weight vector.
  CHECK(z == Approx(11.27).margin(1e-9));
  CHECK(kRhoAct[0] / z == Approx(0.0887).margin(1e-4));
  std::vector<std::string> vars = {"z1", "z2"};
  for (int i = 1; i <= 14; ++i) vars.push_back("u" + std::to_string(i));
  CounterRng rng(9);
  int ones = 0;
  for (int i = 0; i < 20000; ++i) {
    const ColumnSelection s = SelectColumns(rng, vars);
    REQUIRE(!s.actions.empty());
    CHECK(s.actions[0] == "rdtc");
    ones += s.n_actions_drawn == 1;
    std::set<std::string> seen(s.actions.begin(), s.actions.end());
    for (const auto& f : s.features) CHECK(seen.insert(f).second);
    CHECK(s.actions.size() + s.features.size() <= vars.size() + 1);
  }
  CHECK(ones / 20000.0 == Approx(1.0 / 11.27).margin(0.01));
}

TEST_CASE("quantile convention and normalization") {
  const std::vector<double> sym = {-1.0, 0.0, 1.0};
  CHECK(QuantileSorted(sym, 0.5) == 0.0);
  CHECK(QuantileSorted(sym, 0.75) - QuantileSorted(sym, 0.25) == 1.0);

  Task t;
  t.episode = {0, 0, 0};
  t.step = {0, 1, 2};
  t.is_context = {1, 1, 1};
  t.is_valid = {1, 1, 1};
  t.action_names = {"rdtc", "a"};
  t.actions = {{0.0, 0.5, 1.0}, {-1.0, 0.0, 1.0}};
  t.action_mask = {{0, 0, 0}, {0, 0, 0}};
  t.feature_names = {"c"};
  t.features = {{4.0, 4.0, 4.0}};
  Normalize(t);
  CHECK(t.action_meta[1].median == 0.0);
  CHECK(t.action_meta[1].scale == 0.5);
  CHECK(t.actions_norm[1][0] == std::asinh(-2.0));
  CHECK(t.actions_norm[1][1] == 0.0);
  CHECK(t.actions_norm[1][2] == std::asinh(2.0));
  for (double v : t.features_norm[0]) CHECK(v == 0.0);
  CHECK(t.actions_norm[0][2] == std::tanh(5.0));
  CHECK(t.episode_norm == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(t.time_norm == std::vector<double>{-1.0, 0.0, 1.0});

  // Fully masked column.
  t.action_mask[1] = {1, 1, 1};
  Normalize(t);
  CHECK(t.action_meta[1].all_masked);
  CHECK(t.action_meta[1].median == 0.0);
  CHECK(t.action_meta[1].scale == 0.01);
}

TEST_CASE("masked values never reach the normalization") {
  for (uint64_t s = 0; s < 300; ++s) {
    const auto ens = FakeEnsemble(100 + s);
    Task t = MakeTask(ens, s);
    Task poisoned = t;
    for (size_t a = 0; a < t.actions.size(); ++a) {
      for (int r = 0; r < t.rows(); ++r) {
        if (t.action_mask[a][r]) poisoned.actions[a][r] = 1e9;
      }
    }
    Normalize(poisoned);
    for (size_t a = 1; a < t.actions.size(); ++a) {
      CHECK(poisoned.action_meta[a].median == t.action_meta[a].median);
      CHECK(poisoned.action_meta[a].scale == t.action_meta[a].scale);
      for (int r = 0; r < t.rows(); ++r) {
        if (!t.action_mask[a][r]) CHECK(poisoned.actions_norm[a][r] == t.actions_norm[a][r]);
      }
    }
    for (int r = 0; r < t.rows(); ++r) {
      if (!t.action_mask[0][r]) CHECK(poisoned.actions_norm[0][r] == t.actions_norm[0][r]);
    }
  }
}

TEST_CASE("emitted tasks respect budgets and mask rules") {
  int forecast = 0;
  for (uint64_t s = 0; s < 10000; ++s) {
    const auto ens = FakeEnsemble(s % 50);
    const Task t = MakeTask(ens, DeriveSeed(s, "task"));
    CHECK(t.rows() <= kMaxRows);
    CHECK((t.query_rows() >= 1 && t.query_rows() <= kMaxQueryRows));
    const int n = static_cast<int>(t.partition.context.size());
    const int ctx = t.rows() - t.query_rows();
    if (n > 0) CHECK((ctx >= kContextBudget[n][0] && ctx <= kContextBudget[n][1]));
    else CHECK(ctx == 0);
    for (int r = 0; r < t.rows(); ++r) CHECK(t.action_mask[0][r] == (t.is_context[r] ? 0 : 1));
    if (s % 100 != 0) continue;  // the heavier checks on a subset

    // Endpoints of every episode are present.
    std::set<int> eps(t.episode.begin(), t.episode.end());
    for (int ep : eps) {
      std::set<int> steps;
      for (int r = 0; r < t.rows(); ++r) {
        if (t.episode[r] == ep) steps.insert(t.step[r]);
      }
      CHECK(*steps.begin() == 0);
      CHECK(*steps.rbegin() == ens[ep].length - 1);
    }
    if (t.kind == TaskKind::kForecast) {
      ++forecast;
      REQUIRE(t.cutoff_fraction);
      CHECK((*t.cutoff_fraction >= 0.2 && *t.cutoff_fraction <= 0.4));
      if (t.action_names.size() >= 3) CHECK(t.forecast_columns.size() < t.action_names.size() - 1);
      // Up-set in time within the query episode.
      for (size_t a = 1; a < t.actions.size(); ++a) {
        bool seen = false;
        for (int r = 0; r < t.rows(); ++r) {
          if (t.is_context[r]) {
            CHECK(t.action_mask[a][r] == 0);
            continue;
          }
          if (t.action_mask[a][r]) seen = true;
          else CHECK_FALSE(seen);
        }
      }
    } else {
      for (size_t a = 1; a < t.actions.size(); ++a) {
        for (uint8_t m : t.action_mask[a]) CHECK(m == 0);
      }
    }
  }
  CHECK(forecast > 20);
}

TEST_CASE("forecast cutoff threshold semantics") {
  Task t;
  for (int r = 0; r < 100; ++r) {
    t.episode.push_back(0);
    t.step.push_back(r);
    t.is_context.push_back(0);
    t.is_valid.push_back(1);
  }
  t.action_names = {"rdtc", "a"};
  t.actions = {std::vector<double>(100, 0.5), std::vector<double>(100, 1.0)};
  t.action_mask = {std::vector<uint8_t>(100, 1), std::vector<uint8_t>(100, 0)};
  for (uint64_t s = 0; s < 50; ++s) {
    Task u = t;
    CounterRng rng(s);
    ApplyMasks(rng, u);
    if (u.kind == TaskKind::kNone) continue;
    const double c = *u.cutoff_fraction;
    for (int r = 0; r < 100; ++r) CHECK(u.action_mask[1][r] == (r / 99.0 > c ? 1 : 0));
  }
}

TEST_CASE("causal mask") {
  Task t;
  t.episode = {0, 0, 1, 1, 1, 1};
  t.step = {0, 5, 1, 2, 2, 3};
  t.is_context = {1, 1, 0, 0, 0, 0};
  t.is_valid = {1, 1, 1, 1, 1, 1};
  const AttentionMask m = CausalMask(t);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(m(i, j));
    for (int j = 2; j < 6; ++j) CHECK_FALSE(m(i, j));
  }
  for (int i = 2; i < 6; ++i) {
    CHECK(m(i, 0));
    CHECK(m(i, 1));
    CHECK(m(i, i));
  }
  CHECK(m(3, 2));
  CHECK_FALSE(m(2, 3));
  // Equal timestamps: neither sees the other.
  CHECK_FALSE(m(3, 4));
  CHECK_FALSE(m(4, 3));
  CHECK(m(5, 3));
  CHECK(m(5, 4));

  t.is_valid[1] = 0;
  const AttentionMask pad = CausalMask(t);
  for (int i = 0; i < 6; ++i) CHECK_FALSE(pad(i, 1));
}

TEST_CASE("query attention is a strict partial order") {
  for (uint64_t s = 0; s < 20; ++s) {
    const auto ens = FakeEnsemble(s);
    const Task t = MakeTask(ens, s, TaskOptions{true});
    const AttentionMask m = CausalMask(t);
    const int n = t.rows();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (m(i, j)) CHECK_FALSE(m(j, i));
      }
    }
    // Transitivity on a sample of triples.
    for (int i = 0; i < n; i += 7) {
      for (int j = 0; j < n; j += 5) {
        for (int k = 0; k < n; k += 3) {
          if (i != j && j != k && i != k && m(i, j) && m(j, k)) CHECK(m(i, k));
        }
      }
    }
  }
}

TEST_CASE("pure context tasks are fully connected") {
  Task t;
  t.episode = {0, 0, 1};
  t.step = {0, 1, 0};
  t.is_context = {1, 1, 1};
  t.is_valid = {1, 1, 1};
  const AttentionMask m = CausalMask(t);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(m(i, j));
  }
}

TEST_CASE("pinball loss") {
  std::vector<double> q(99, 0.7);
  CHECK(PinballLoss(q, 0.7) == 0.0);
  const std::vector<double> half = {0.5}, nine = {0.9}, zero = {0.0};
  CHECK(PinballLoss(zero, 2.0, half) == 1.0);
  CHECK(PinballLoss(zero, -1.0, nine) == Approx(0.1).epsilon(1e-12));
  // Against the brute-force definition on the default levels.
  CounterRng rng(12);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p(99);
    for (double& v : p) v = rng.Normal();
    const double y = rng.Normal();
    double ref = 0.0;
    for (int j = 0; j < 99; ++j) {
      const double a = (j + 1) / 100.0, d = y - p[j];
      ref += d >= 0 ? a * d : (a - 1.0) * d;
    }
    CHECK(PinballLoss(p, y) == Approx(ref / 99.0).epsilon(1e-12));
  }
  std::vector<double> bad(99, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(PinballLoss(bad, 0.0), Error);
}

TEST_CASE("task serialization") {
  const auto ens = FakeEnsemble(13);
  const Task t = MakeTask(ens, 14);
  const Task t2 = MakeTask(ens, 14);
  CHECK(TaskToJson(t, "x:t0") == TaskToJson(t2, "x:t0"));
  CHECK(TaskToJson(t, "x:t0").find('\n') == std::string::npos);
  const std::string csv = TaskToCsv(t);
  CHECK(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')) == t.rows() + 1);
  CHECK(TaskToJson(MakeTask(ens, 15), "x:t0") != TaskToJson(t, "x:t0"));
}
