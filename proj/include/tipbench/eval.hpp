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

#ifndef TIPBENCH_EVAL_HPP_
#define TIPBENCH_EVAL_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tipbench/ews.hpp"
#include "tipbench/rng.hpp"
#include "tipbench/simulate.hpp"

namespace tipbench {

// ---------------------------------------------------------------------------
// Query windows.

struct QueryWindow {
  std::string query_id;
  std::string system;
  int episode_index = -1;
  uint64_t episode_seed = 0;
  std::string forcing_class;
  int window_len = 0;
  int delta = 0;
  bool label = false;
  // Source steps [first, last]; kept for bookkeeping, never serialized with
  // the values.
  int first = 0;
  int last = 0;
  std::vector<double> values;  // re-indexed driving series, length W
};

struct WindowReport {
  int critical_windows = 0;
  int noncritical_windows = 0;
  int skipped_no_tcrit = 0;    // critical episodes that never reached t_crit
  int skipped_too_short = 0;   // (episode, delta) pairs without room for W
  int skipped_invalid = 0;     // windows touching non-finite samples
};

// Critical windows end at t_crit - 1 - delta. Non-critical episodes get one
// window per delta with the end drawn uniformly over [W - 1, length - 1]
// from a stream keyed by (seed, episode_seed, W, delta).
std::vector<QueryWindow> BuildQueryWindows(std::span<const Episode> episodes, int window_len,
                                           std::span<const int> deltas, uint64_t seed,
                                           WindowReport* report = nullptr);

// Values only; no identifiers or absolute times.
std::string WindowValuesCsv(const QueryWindow& w);

enum class ShortMode { kPad, kBackfill, kResample };
std::string_view ShortModeName(ShortMode m);
ShortMode ShortModeFromName(std::string_view name);  // throws kConfig
// Longer inputs keep their last target_len samples under pad and backfill.
std::vector<double> ShortModeAdapt(std::span<const double> signal, int target_len, ShortMode mode);

// ---------------------------------------------------------------------------
// Risk heads from quantile predictions.

inline constexpr int kNumQuantiles = 99;
inline constexpr std::array<double, 4> kRiskThresholds = {0.05, 0.1, 0.2, 0.3};
inline constexpr double kThresholdScale = 0.2;

// tau~ = tanh(tau / 0.2).
inline double MapThreshold(double tau) { return std::tanh(tau / kThresholdScale); }

struct QuantilePrediction {
  std::string query_id;
  std::string scope;  // "nc" or "fc"
  int position = 0;
  std::array<double, kNumQuantiles> values{};  // sorted on ingestion
};

double OneMinusMedian(std::span<const double> q);
// 1 - integral of the quantile function over [0, 1]; flat extension beyond
// the outer levels unless exponential_tails is set.
double OneMinusMean(std::span<const double> q, bool exponential_tails = false);
// Pr(Q < x) by linear interpolation between (q_j, alpha_j), linear
// extrapolation beyond the outer levels, clamped to [0, 1].
double CdfBelow(std::span<const double> q, double x);

struct HeadScore {
  std::string head;  // "1-median", "1-mean", "P(rdtc<0.05)", ...
  double score;
};
// The six heads of one scope.
std::vector<HeadScore> RiskHeads(std::span<const double> q, bool exponential_tails = false);

// Inverse CDF of a histogram: probs over B bins, borders b_0..b_B.
double QuantileFromBins(std::span<const double> probs, std::span<const double> borders, double alpha);
std::vector<double> Softmax(std::span<const double> logits);

// ---------------------------------------------------------------------------
// ROC / AUROC.

double Auroc(std::span<const double> scores, std::span<const uint8_t> labels);

struct BalancedAurocResult {
  double mean = 0.0;
  double std = 0.0;  // population std (ddof = 0) over the K subsamples
  int n_pos = 0;
  int n_neg = 0;
};
BalancedAurocResult BalancedAuroc(CounterRng& rng, std::span<const double> scores,
                                  std::span<const uint8_t> labels, int k = 10);

double HanleyMcNeilSe(double auroc, int64_t n_min_pooled);
double BalancedSubsampleSe(std::span<const double> per_point_stds, int k = 10);

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};
std::vector<RocPoint> RocCurve(std::span<const double> scores, std::span<const uint8_t> labels);

// ---------------------------------------------------------------------------
// Score tables and reports.

struct ScoreRecord {
  std::string query_id;
  std::string method;
  double score = 0.0;
  bool label = false;
  int delta = 0;
  int window_len = 0;
  std::string system;
};

using ScoreTable = std::vector<ScoreRecord>;

std::string ScoreTableCsv(const ScoreTable& table);
ScoreTable ParseScoreTableCsv(std::string_view text);  // throws kData

// EWS scores for every window and indicator on the driving series.
ScoreTable ScoreEws(std::span<const QueryWindow> windows, std::span<const Indicator> indicators,
                    std::optional<int> rolling_window = std::nullopt, double rolling_factor = 0.5);

// Prediction CSV: query_id, scope, position, q001..q099 on the Lambda* scale.
std::vector<QuantilePrediction> ParsePredictionsCsv(std::string_view text);  // throws kData

// Six heads per scope for every prediction. Forecast rows must sit at
// position 191 (the last step of the 192-row horizon); nowcast rows at W - 1.
// Every window must have at least one prediction.
ScoreTable ScorePredictions(std::span<const QueryWindow> windows,
                            std::span<const QuantilePrediction> preds, std::string_view model,
                            bool exponential_tails = false);

inline constexpr int kForecastHorizonRows = 192;

struct CellResult {
  std::string system;
  std::string method;
  int delta = 0;
  std::optional<BalancedAurocResult> auroc;  // unset: single-class cell
};

struct MacroResult {
  std::string system;  // "All datasets" for the summary row
  std::string method;
  std::optional<double> auroc;
  int cells = 0;
  int missing_cells = 0;
  int64_t n_min_pooled = 0;
  double se_hm = 0.0;
  double se_bs = 0.0;
};

struct Report {
  std::vector<CellResult> cells;
  std::vector<MacroResult> macro;
};

inline constexpr std::string_view kAllDatasets = "All datasets";

// Balanced AUROC per (system, method, delta); macro mean over delta > 0 when
// positive_deltas_only, else over all deltas. Subsample streams are keyed by
// (seed, system, method, delta).
Report MacroAuroc(const ScoreTable& table, bool positive_deltas_only, uint64_t seed, int k = 10);

std::string CellsCsv(const Report& r);
std::string MacroLongCsv(const Report& r);
// Rows = systems, columns = methods plus _se_hm and _se_bs columns.
std::string MacroWideCsv(const Report& r);
// fpr,tpr,threshold for one cell.
std::string RocCsv(std::span<const RocPoint> pts);

}  // namespace tipbench

#endif  // TIPBENCH_EVAL_HPP_
