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

#include "tipbench/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "tipbench/error.hpp"

namespace tipbench {
namespace {

using Json = nlohmann::ordered_json;

template <typename T>
void Shuffle(CounterRng& rng, std::vector<T>& v) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.Below(i));
    std::swap(v[i - 1], v[j]);
  }
}

int UniformInt(CounterRng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.Below(static_cast<uint64_t>(hi - lo + 1)));
}

std::vector<double> MinMax(const std::vector<int>& v, const std::vector<uint8_t>& valid) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (size_t i = 0; i < v.size(); ++i) {
    if (!valid[i]) continue;
    if (!any) {
      lo = hi = v[i];
      any = true;
    }
    lo = std::min<double>(lo, v[i]);
    hi = std::max<double>(hi, v[i]);
  }
  std::vector<double> out(v.size(), 0.0);
  if (!any || hi == lo) return out;
  for (size_t i = 0; i < v.size(); ++i) out[i] = 2.0 * (v[i] - lo) / (hi - lo) - 1.0;
  return out;
}

void Num(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "nan";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

Partition PartitionEpisodes(CounterRng& rng, std::span<const Episode> episodes,
                            bool force_zero_context) {
  const int k = static_cast<int>(episodes.size());
  if (k < 1) Fail(ErrorKind::kData, "partition: no episodes");
  Partition part;
  part.query = static_cast<int>(rng.Below(static_cast<uint64_t>(k)));
  part.n_ctx_drawn = static_cast<int>(rng.Categorical(kNctxProbs));
  const int query_len = episodes[part.query].length;
  if (query_len < 1) Fail(ErrorKind::kData, "partition: empty query episode");
  part.query_rows = std::min({kQueryTargetRows, kMaxQueryRows, query_len});

  std::vector<int> pool;
  for (int i = 0; i < k; ++i) {
    if (i != part.query && episodes[i].length >= kContextMinRows) pool.push_back(i);
  }
  Shuffle(rng, pool);
  const int n = force_zero_context ? 0 : std::min<int>(part.n_ctx_drawn, static_cast<int>(pool.size()));
  if (n == 0) return part;
  part.context.assign(pool.begin(), pool.begin() + n);

  std::vector<int> cap(n);
  int cap_total = 0;
  for (int i = 0; i < n; ++i) {
    cap[i] = std::min(kContextMaxRows, episodes[part.context[i]].length);
    cap_total += cap[i];
  }
  const int hi = std::min({kContextBudget[n][1], cap_total, kMaxRows - part.query_rows});
  const int lo = std::min(kContextBudget[n][0], hi);
  const int total = UniformInt(rng, lo, hi);
  part.context_rows.assign(n, kContextMinRows);
  int remaining = total - kContextMinRows * n;
  while (remaining > 0) {
    std::vector<int> open;
    for (int i = 0; i < n; ++i) {
      if (part.context_rows[i] < cap[i]) open.push_back(i);
    }
    if (open.empty()) break;
    ++part.context_rows[open[rng.Below(open.size())]];
    --remaining;
  }
  return part;
}

std::vector<int> StratifiedJitter(CounterRng& rng, int n_source, int n_target) {
  if (n_target > n_source) {
    Fail(ErrorKind::kInvalidArgument, "stratified_jitter: n_target exceeds n_source");
  }
  Require(n_target >= 2, "stratified_jitter: n_target must be >= 2");
  std::vector<int> idx;
  idx.reserve(static_cast<size_t>(n_target));
  idx.push_back(0);
  const int interior = n_target - 2;
  if (interior > 0) {
    const double w = static_cast<double>(n_source - 2) / interior;
    for (int j = 0; j < interior; ++j) {
      // Integer points of [1 + j w, 1 + (j + 1) w).
      const int a = static_cast<int>(std::ceil(1.0 + j * w - 1e-9));
      const int b = static_cast<int>(std::ceil(1.0 + (j + 1) * w - 1e-9)) - 1;
      idx.push_back(a + static_cast<int>(rng.Below(static_cast<uint64_t>(std::max(1, b - a + 1)))));
    }
  }
  idx.push_back(n_source - 1);
  return idx;
}

ColumnSelection SelectColumns(CounterRng& rng, std::span<const std::string> variables) {
  ColumnSelection sel;
  sel.n_actions_drawn = 1 + static_cast<int>(rng.Categorical(kRhoAct));
  sel.n_features_drawn = 1 + static_cast<int>(rng.Categorical(kRhoFeat));
  std::vector<std::string> pool(variables.begin(), variables.end());
  Shuffle(rng, pool);
  const size_t n_extra = std::min<size_t>(static_cast<size_t>(sel.n_actions_drawn - 1), pool.size());
  sel.actions.push_back("rdtc");
  sel.actions.insert(sel.actions.end(), pool.begin(), pool.begin() + n_extra);
  const size_t n_feat =
      std::min<size_t>(static_cast<size_t>(sel.n_features_drawn), pool.size() - n_extra);
  sel.features.assign(pool.begin() + n_extra, pool.begin() + n_extra + n_feat);
  return sel;
}

std::string_view TaskKindName(TaskKind k) { return k == TaskKind::kForecast ? "forecast" : "none"; }

int Task::query_rows() const {
  return static_cast<int>(std::count(is_context.begin(), is_context.end(), uint8_t{0}));
}

Task AssembleTask(CounterRng& rng, std::span<const Episode> episodes, const Partition& part,
                  const ColumnSelection& sel) {
  Task t;
  t.partition = part;
  t.selection = sel;
  t.action_names = sel.actions;
  t.feature_names = sel.features;
  t.actions.resize(sel.actions.size());
  t.features.resize(sel.features.size());
  t.action_mask.resize(sel.actions.size());

  auto add_episode = [&](int ep, int n_rows, bool context) {
    const Episode& e = episodes[ep];
    const std::vector<int> idx =
        n_rows >= 2 ? StratifiedJitter(rng, e.length, n_rows) : std::vector<int>{e.length - 1};
    std::vector<const std::vector<double>*> acol, fcol;
    for (const auto& name : sel.actions) acol.push_back(&e.Column(name));
    for (const auto& name : sel.features) fcol.push_back(&e.Column(name));
    for (int s : idx) {
      t.episode.push_back(ep);
      t.step.push_back(s);
      t.is_context.push_back(context ? 1 : 0);
      bool valid = true;
      for (size_t a = 0; a < acol.size(); ++a) {
        const double v = (*acol[a])[s];
        valid = valid && std::isfinite(v);
        t.actions[a].push_back(v);
        t.action_mask[a].push_back(!context && a == 0 ? 1 : 0);
      }
      for (size_t f = 0; f < fcol.size(); ++f) {
        const double v = (*fcol[f])[s];
        valid = valid && std::isfinite(v);
        t.features[f].push_back(v);
      }
      t.is_valid.push_back(valid ? 1 : 0);
    }
  };
  for (size_t c = 0; c < part.context.size(); ++c) add_episode(part.context[c], part.context_rows[c], true);
  add_episode(part.query, part.query_rows, false);
  if (t.query_rows() < 1) Fail(ErrorKind::kData, "task: empty query after selection");
  return t;
}

void ApplyMasks(CounterRng& rng, Task& task) {
  const bool forecast = rng.Bernoulli(0.5);
  if (!forecast) {
    task.kind = TaskKind::kNone;
    return;
  }
  task.kind = TaskKind::kForecast;
  const double c = rng.Uniform(0.2, 0.4);
  task.cutoff_fraction = c;
  const int m = static_cast<int>(task.action_names.size()) - 1;
  if (m < 1) return;
  // Uniform over nonempty subsets, excluding the full set when m >= 2 so at
  // least one action column stays observed.
  uint64_t bits = 1;
  if (m >= 2) {
    const uint64_t n_subsets = (uint64_t{1} << m) - 2;
    bits = 1 + rng.Below(n_subsets);
  }
  std::vector<int> cols;
  for (int a = 0; a < m; ++a) {
    if (bits >> a & 1) cols.push_back(a + 1);
  }
  int t0 = 0, t1 = 0;
  bool first = true;
  for (int r = 0; r < task.rows(); ++r) {
    if (task.is_context[r]) continue;
    if (first) {
      t0 = t1 = task.step[r];
      first = false;
    }
    t0 = std::min(t0, task.step[r]);
    t1 = std::max(t1, task.step[r]);
  }
  for (int r = 0; r < task.rows(); ++r) {
    if (task.is_context[r]) continue;
    const double frac = t1 > t0 ? static_cast<double>(task.step[r] - t0) / (t1 - t0) : 1.0;
    if (frac > c) {
      for (int a : cols) task.action_mask[a][r] = 1;
    }
  }
  for (int a : cols) task.forecast_columns.push_back(task.action_names[a]);
}

double QuantileSorted(std::span<const double> sorted, double q) {
  Require(!sorted.empty(), "quantile: empty input");
  Require(q >= 0.0 && q <= 1.0, "quantile: level outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const size_t lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

namespace {

NormMeta ColumnMeta(const std::vector<double>& v, const std::vector<uint8_t>* mask,
                    const std::vector<uint8_t>& valid) {
  std::vector<double> obs;
  obs.reserve(v.size());
  for (size_t r = 0; r < v.size(); ++r) {
    if (!valid[r] || (mask && (*mask)[r])) continue;
    obs.push_back(v[r]);
  }
  NormMeta m;
  if (obs.empty()) {
    m.all_masked = true;
    return m;
  }
  std::sort(obs.begin(), obs.end());
  m.median = QuantileSorted(obs, 0.5);
  const double iqr = QuantileSorted(obs, 0.75) - QuantileSorted(obs, 0.25);
  m.scale = std::max(0.01, 0.5 * iqr);
  return m;
}

std::vector<double> Apply(const std::vector<double>& v, const NormMeta& m) {
  std::vector<double> out(v.size());
  for (size_t r = 0; r < v.size(); ++r) out[r] = std::asinh((v[r] - m.median) / m.scale);
  return out;
}

}  // namespace

void Normalize(Task& task) {
  task.episode_norm = MinMax(task.episode, task.is_valid);
  task.time_norm = MinMax(task.step, task.is_valid);
  const size_t na = task.actions.size();
  task.actions_norm.assign(na, {});
  task.action_meta.assign(na, NormMeta{});
  for (size_t a = 0; a < na; ++a) {
    if (a == 0) {
      task.actions_norm[0].resize(task.actions[0].size());
      for (size_t r = 0; r < task.actions[0].size(); ++r) {
        task.actions_norm[0][r] = RdtcTransform(task.actions[0][r]);
      }
      continue;
    }
    task.action_meta[a] = ColumnMeta(task.actions[a], &task.action_mask[a], task.is_valid);
    task.actions_norm[a] = Apply(task.actions[a], task.action_meta[a]);
  }
  task.features_norm.assign(task.features.size(), {});
  task.feature_meta.assign(task.features.size(), NormMeta{});
  for (size_t f = 0; f < task.features.size(); ++f) {
    task.feature_meta[f] = ColumnMeta(task.features[f], nullptr, task.is_valid);
    task.features_norm[f] = Apply(task.features[f], task.feature_meta[f]);
  }
}

AttentionMask CausalMask(const Task& task) {
  AttentionMask m;
  m.n = task.rows();
  m.allowed.assign(static_cast<size_t>(m.n) * m.n, 0);
  const bool have_norm = task.time_norm.size() == static_cast<size_t>(m.n);
  for (int i = 0; i < m.n; ++i) {
    const double ti = have_norm ? task.time_norm[i] : task.step[i];
    for (int j = 0; j < m.n; ++j) {
      bool ok;
      if (i == j) {
        ok = true;
      } else if (task.is_context[j]) {
        ok = true;
      } else if (task.is_context[i]) {
        ok = false;
      } else {
        const double tj = have_norm ? task.time_norm[j] : task.step[j];
        ok = task.episode[j] == task.episode[i] && tj < ti - kTimeTolerance;
      }
      // Padded keys are never visible.
      if (!task.is_valid[j]) ok = false;
      m.allowed[static_cast<size_t>(i) * m.n + j] = ok ? 1 : 0;
    }
  }
  return m;
}

std::array<double, 99> QuantileLevels() {
  std::array<double, 99> a{};
  for (int j = 0; j < 99; ++j) a[j] = (j + 1) / 100.0;
  return a;
}

double PinballLoss(std::span<const double> quantiles, double target, std::span<const double> levels) {
  static const std::array<double, 99> kDefault = QuantileLevels();
  if (levels.empty()) levels = kDefault;
  Require(quantiles.size() == levels.size() && !quantiles.empty(),
          "pinball_loss: quantiles and levels differ in length");
  Require(std::isfinite(target), "pinball_loss: non-finite target");
  double sum = 0.0;
  for (size_t j = 0; j < quantiles.size(); ++j) {
    Require(std::isfinite(quantiles[j]), "pinball_loss: non-finite prediction");
    const double d = target - quantiles[j];
    sum += d >= 0.0 ? levels[j] * d : (levels[j] - 1.0) * d;
  }
  return sum / static_cast<double>(quantiles.size());
}

Task MakeTask(std::span<const Episode> episodes, uint64_t seed, const TaskOptions& opt) {
  const CounterRng root(seed);
  CounterRng part_rng = root.Child("partition");
  CounterRng jitter_rng = root.Child("jitter");
  CounterRng col_rng = root.Child("columns");
  CounterRng mask_rng = root.Child("mask");
  const Partition part = PartitionEpisodes(part_rng, episodes, opt.force_zero_context);
  std::vector<std::string> vars;
  for (const auto& name : episodes[part.query].names) {
    if (name != "lambda_tilde" && name != "rdtc") vars.push_back(name);
  }
  const ColumnSelection sel = SelectColumns(col_rng, vars);
  Task t = AssembleTask(jitter_rng, episodes, part, sel);
  t.seed = seed;
  ApplyMasks(mask_rng, t);
  Normalize(t);
  return t;
}

std::string TaskToJson(const Task& t, std::string_view task_id) {
  Json doc;
  doc["task_id"] = std::string(task_id);
  doc["seed"] = t.seed;
  doc["task_kind"] = std::string(TaskKindName(t.kind));
  doc["cutoff_fraction"] = t.cutoff_fraction ? Json(*t.cutoff_fraction) : Json(nullptr);
  doc["forecast_columns"] = t.forecast_columns;
  doc["n_ctx_drawn"] = t.partition.n_ctx_drawn;
  doc["query_episode"] = t.partition.query;
  doc["context_episodes"] = t.partition.context;
  doc["n_actions_drawn"] = t.selection.n_actions_drawn;
  doc["n_features_drawn"] = t.selection.n_features_drawn;
  doc["action_names"] = t.action_names;
  doc["feature_names"] = t.feature_names;
  doc["episode"] = t.episode;
  doc["step"] = t.step;
  doc["is_context"] = t.is_context;
  doc["is_valid"] = t.is_valid;
  doc["episode_norm"] = t.episode_norm;
  doc["time_norm"] = t.time_norm;
  auto put = [](const std::vector<std::vector<double>>& cols) {
    Json arr = Json::array();
    for (const auto& c : cols) {
      Json col = Json::array();
      for (double v : c) col.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
      arr.push_back(col);
    }
    return arr;
  };
  doc["actions"] = put(t.actions);
  doc["actions_norm"] = put(t.actions_norm);
  doc["action_mask"] = t.action_mask;
  doc["features"] = put(t.features);
  doc["features_norm"] = put(t.features_norm);
  auto meta = [](const std::vector<NormMeta>& ms) {
    Json arr = Json::array();
    for (const auto& m : ms) {
      arr.push_back({{"median", m.median}, {"scale", m.scale}, {"all_masked", m.all_masked}});
    }
    return arr;
  };
  doc["action_meta"] = meta(t.action_meta);
  doc["feature_meta"] = meta(t.feature_meta);
  return doc.dump();
}

std::string TaskToCsv(const Task& t) {
  std::string out = "row,episode,step,episode_norm,time_norm,is_context,is_valid";
  for (const auto& a : t.action_names) out += "," + a + "," + a + "_norm," + a + "_mask";
  for (const auto& f : t.feature_names) out += "," + f + "," + f + "_norm";
  out += '\n';
  for (int r = 0; r < t.rows(); ++r) {
    out += std::to_string(r) + ',' + std::to_string(t.episode[r]) + ',' + std::to_string(t.step[r]) + ',';
    Num(out, t.episode_norm.empty() ? 0.0 : t.episode_norm[r]);
    out += ',';
    Num(out, t.time_norm.empty() ? 0.0 : t.time_norm[r]);
    out += ',' + std::to_string(t.is_context[r]) + ',' + std::to_string(t.is_valid[r]);
    for (size_t a = 0; a < t.actions.size(); ++a) {
      out += ',';
      Num(out, t.actions[a][r]);
      out += ',';
      Num(out, t.actions_norm.empty() ? 0.0 : t.actions_norm[a][r]);
      out += ',' + std::to_string(t.action_mask[a][r]);
    }
    for (size_t f = 0; f < t.features.size(); ++f) {
      out += ',';
      Num(out, t.features[f][r]);
      out += ',';
      Num(out, t.features_norm.empty() ? 0.0 : t.features_norm[f][r]);
    }
    out += '\n';
  }
  return out;
}

std::string AttentionPairsCsv(const AttentionMask& m) {
  std::string out = "i,j\n";
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) {
      if (m(i, j)) out += std::to_string(i) + ',' + std::to_string(j) + '\n';
    }
  }
  return out;
}

}  // namespace tipbench
