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

#ifndef TIPBENCH_TASKGEN_HPP_
#define TIPBENCH_TASKGEN_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tipbench/rng.hpp"
#include "tipbench/simulate.hpp"

namespace tipbench {

inline constexpr int kMaxRows = 512;
inline constexpr int kMaxQueryRows = 256;
inline constexpr int kQueryTargetRows = 192;
inline constexpr int kContextMinRows = 92;
inline constexpr int kContextMaxRows = 256;
inline constexpr double kTimeTolerance = 1e-6;

inline constexpr std::array<double, 4> kNctxProbs = {0.2, 0.3, 0.3, 0.2};
// Total context rows for N_ctx = 0..3.
inline constexpr std::array<std::array<int, 2>, 4> kContextBudget = {
    {{0, 0}, {92, 256}, {184, 320}, {276, 320}}};

inline constexpr std::array<double, 16> kRhoAct = {1.00, 0.95, 0.90, 0.86, 0.82, 0.78,
                                                   0.74, 0.70, 0.67, 0.64, 0.61, 0.58,
                                                   0.55, 0.52, 0.49, 0.46};
inline constexpr std::array<double, 20> kRhoFeat = {1.00, 0.97, 0.94, 0.91, 0.88, 0.85, 0.82,
                                                    0.79, 0.76, 0.73, 0.70, 0.67, 0.64, 0.61,
                                                    0.58, 0.55, 0.52, 0.49, 0.46, 0.43};

struct Partition {
  int query = -1;
  std::vector<int> context;       // episode indices, in selection order
  int n_ctx_drawn = 0;            // before truncation to available episodes
  int query_rows = 0;
  std::vector<int> context_rows;  // per context episode
};

// Episodes shorter than the context minimum are never used as context.
Partition PartitionEpisodes(CounterRng& rng, std::span<const Episode> episodes,
                            bool force_zero_context = false);

// Sorted indices into [0, n_source): both endpoints plus one uniform pick
// per interior stratum of width (n_source - 2) / (n_target - 2).
std::vector<int> StratifiedJitter(CounterRng& rng, int n_source, int n_target);

struct ColumnSelection {
  int n_actions_drawn = 1;
  int n_features_drawn = 1;
  std::vector<std::string> actions;   // "rdtc" first
  std::vector<std::string> features;
};

// `variables` are the candidate dynamic columns (z1, z2, u1..u14).
ColumnSelection SelectColumns(CounterRng& rng, std::span<const std::string> variables);

enum class TaskKind { kNone, kForecast };
std::string_view TaskKindName(TaskKind k);

struct NormMeta {
  double median = 0.0;
  double scale = 0.01;
  bool all_masked = false;
};

struct Task {
  // Row identifiers.
  std::vector<int> episode;   // index into the ensemble
  std::vector<int> step;      // source output step
  std::vector<uint8_t> is_context;
  std::vector<uint8_t> is_valid;
  // Column-major payload. actions[0] is RDTC (raw Lambda).
  std::vector<std::string> action_names;
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> actions;
  std::vector<std::vector<double>> features;
  std::vector<std::vector<uint8_t>> action_mask;  // 1 = hidden target
  // Filled by Normalize.
  std::vector<double> episode_norm;
  std::vector<double> time_norm;
  std::vector<std::vector<double>> actions_norm;
  std::vector<std::vector<double>> features_norm;
  std::vector<NormMeta> action_meta;   // entry 0 unused (RDTC uses tanh)
  std::vector<NormMeta> feature_meta;
  TaskKind kind = TaskKind::kNone;
  std::optional<double> cutoff_fraction;
  std::vector<std::string> forecast_columns;
  Partition partition;
  ColumnSelection selection;
  uint64_t seed = 0;

  int rows() const { return static_cast<int>(episode.size()); }
  int query_rows() const;
};

// Rows: context episodes first (time ascending), then the query episode.
// RDTC is masked in every query row.
Task AssembleTask(CounterRng& rng, std::span<const Episode> episodes, const Partition& part,
                  const ColumnSelection& sel);

// 50/50 none/forecast. Forecast masks a nonempty subset of the non-RDTC
// action columns in query rows whose time fraction exceeds c ~ U(0.2, 0.4).
void ApplyMasks(CounterRng& rng, Task& task);

// Quantile with linear interpolation between order statistics (inclusive).
double QuantileSorted(std::span<const double> sorted, double q);

void Normalize(Task& task);

struct AttentionMask {
  int n = 0;
  std::vector<uint8_t> allowed;  // row-major: allowed[i * n + j] = i attends j
  bool operator()(int i, int j) const { return allowed[static_cast<size_t>(i) * n + j] != 0; }
};
AttentionMask CausalMask(const Task& task);

// Mean pinball loss over levels; levels default to j/100, j = 1..99.
double PinballLoss(std::span<const double> quantiles, double target,
                   std::span<const double> levels = {});
std::array<double, 99> QuantileLevels();

struct TaskOptions {
  bool force_zero_context = false;
};

// Full pipeline: partition, subsample, select columns, mask, normalize.
Task MakeTask(std::span<const Episode> episodes, uint64_t seed, const TaskOptions& opt = {});

// Serialization. The JSON line holds raw and normalized values plus masks and
// norm_meta; the CSV holds one row per task row with the same content.
std::string TaskToJson(const Task& task, std::string_view task_id);
std::string TaskToCsv(const Task& task);
// Row-pair list "i,j" of the attention relation (debugging aid).
std::string AttentionPairsCsv(const AttentionMask& mask);

}  // namespace tipbench

#endif  // TIPBENCH_TASKGEN_HPP_
