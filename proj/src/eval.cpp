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

#include "tipbench/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "tipbench/error.hpp"

namespace tipbench {
namespace {

std::string Num(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Short(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (start < text.size()) {
    size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view l = text.substr(start, pos - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    out.push_back(l);
    start = pos + 1;
  }
  return out;
}

bool ParseDouble(std::string_view s, double& out) {
  if (s.empty()) return false;
  const std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size();
}

bool ParseInt(std::string_view s, int& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::string LineError(size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

double Level(size_t j) { return static_cast<double>(j + 1) / 100.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Query windows.

std::vector<QueryWindow> BuildQueryWindows(std::span<const Episode> episodes, int window_len,
                                           std::span<const int> deltas, uint64_t seed,
                                           WindowReport* report) {
  Require(window_len >= 2, "build_query_windows: window_len must be >= 2");
  WindowReport rep;
  std::vector<QueryWindow> out;
  for (size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    const std::vector<double>& sig = ep.Signal();
    const int len = static_cast<int>(sig.size());
    const bool critical = ep.IsCritical();
    if (critical && !ep.t_crit) {
      rep.skipped_no_tcrit += static_cast<int>(deltas.size());
      continue;
    }
    for (int delta : deltas) {
      int last = 0;
      if (critical) {
        last = *ep.t_crit - 1 - delta;
      } else {
        if (len < window_len) {
          ++rep.skipped_too_short;
          continue;
        }
        CounterRng rng(DeriveSeed(DeriveSeed(seed, "window", ep.episode_seed),
                                  "w" + std::to_string(window_len),
                                  static_cast<uint64_t>(static_cast<int64_t>(delta))));
        last = window_len - 1 + static_cast<int>(rng.Below(static_cast<uint64_t>(len - window_len + 1)));
      }
      const int first = last - window_len + 1;
      if (first < 0 || last >= len) {
        ++rep.skipped_too_short;
        continue;
      }
      QueryWindow w;
      w.system = ep.system;
      w.episode_index = static_cast<int>(e);
      w.episode_seed = ep.episode_seed;
      w.forcing_class = std::string(ForcingClassName(ep.forcing_class));
      w.window_len = window_len;
      w.delta = delta;
      w.label = critical;
      w.first = first;
      w.last = last;
      w.values.assign(sig.begin() + first, sig.begin() + last + 1);
      if (!std::all_of(w.values.begin(), w.values.end(), [](double v) { return std::isfinite(v); })) {
        ++rep.skipped_invalid;
        continue;
      }
      w.query_id = ep.system + ":" + std::to_string(ep.episode_seed) + ":w" +
                   std::to_string(window_len) + ":d" + std::to_string(delta);
      (critical ? rep.critical_windows : rep.noncritical_windows)++;
      out.push_back(std::move(w));
    }
  }
  if (report) *report = rep;
  return out;
}

std::string WindowValuesCsv(const QueryWindow& w) {
  std::string s = "time,value\n";
  for (size_t t = 0; t < w.values.size(); ++t) {
    s += std::to_string(t);
    s += ',';
    s += Num(w.values[t]);
    s += '\n';
  }
  return s;
}

std::string_view ShortModeName(ShortMode m) {
  switch (m) {
    case ShortMode::kPad:
      return "pad";
    case ShortMode::kBackfill:
      return "backfill";
    case ShortMode::kResample:
      return "resample";
  }
  return "pad";
}

ShortMode ShortModeFromName(std::string_view name) {
  for (ShortMode m : {ShortMode::kPad, ShortMode::kBackfill, ShortMode::kResample}) {
    if (ShortModeName(m) == name) return m;
  }
  Fail(ErrorKind::kConfig, "unknown short mode '" + std::string(name) + "'");
}

std::vector<double> ShortModeAdapt(std::span<const double> signal, int target_len, ShortMode mode) {
  Require(!signal.empty(), "short_mode_adapt: empty signal");
  Require(target_len >= 1, "short_mode_adapt: target_len must be >= 1");
  const size_t n = signal.size();
  const size_t m = static_cast<size_t>(target_len);
  if (n == m) return {signal.begin(), signal.end()};
  if (mode == ShortMode::kResample) {
    std::vector<double> out(m);
    if (m == 1 || n == 1) {
      std::fill(out.begin(), out.end(), m == 1 ? signal.back() : signal.front());
      return out;
    }
    const double scale = static_cast<double>(n - 1) / static_cast<double>(m - 1);
    for (size_t i = 0; i < m; ++i) {
      const double x = static_cast<double>(i) * scale;
      const size_t lo = std::min(static_cast<size_t>(x), n - 2);
      const double f = x - static_cast<double>(lo);
      out[i] = signal[lo] + f * (signal[lo + 1] - signal[lo]);
    }
    out.back() = signal.back();
    return out;
  }
  if (n > m) return {signal.end() - static_cast<std::ptrdiff_t>(m), signal.end()};
  std::vector<double> out;
  out.reserve(m);
  if (mode == ShortMode::kBackfill) out.assign(m - n, signal.front());
  out.insert(out.end(), signal.begin(), signal.end());
  if (mode == ShortMode::kPad) out.resize(m, signal.back());
  return out;
}

// ---------------------------------------------------------------------------
// Risk heads.

double OneMinusMedian(std::span<const double> q) {
  Require(q.size() == kNumQuantiles, "one_minus_median: need 99 quantiles");
  return 1.0 - q[49];
}

double OneMinusMean(std::span<const double> q, bool exponential_tails) {
  Require(q.size() == kNumQuantiles, "one_minus_mean: need 99 quantiles");
  double integral = 0.0;
  for (size_t j = 0; j + 1 < q.size(); ++j) {
    integral += 0.5 * (q[j] + q[j + 1]) * (Level(j + 1) - Level(j));
  }
  const double a_lo = Level(0), a_hi = Level(q.size() - 1);
  double lo_tail = a_lo * q.front();
  double hi_tail = (1.0 - a_hi) * q.back();
  if (exponential_tails) {
    // q(p) = q_1 - b ln(alpha_1 / p) below alpha_1 and the mirror image above
    // alpha_99; b from the outermost level pair. Integrals in closed form.
    const double b_lo = (q[1] - q[0]) / std::log(Level(1) / Level(0));
    const size_t k = q.size() - 1;
    const double b_hi = (q[k] - q[k - 1]) / std::log((1.0 - Level(k - 1)) / (1.0 - Level(k)));
    lo_tail -= b_lo * a_lo;
    hi_tail += b_hi * (1.0 - a_hi);
  }
  return 1.0 - (lo_tail + integral + hi_tail);
}

double CdfBelow(std::span<const double> q, double x) {
  Require(q.size() == kNumQuantiles, "cdf_below: need 99 quantiles");
  const size_t n = q.size();
  const size_t k = static_cast<size_t>(std::lower_bound(q.begin(), q.end(), x) - q.begin());
  double f = 0.0;
  if (k > 0 && k < n) {
    f = Level(k - 1) + (x - q[k - 1]) / (q[k] - q[k - 1]) * (Level(k) - Level(k - 1));
  } else if (k == 0) {
    // At or below the lowest quantile: extend the first sloped segment.
    size_t j = 0;
    while (j + 1 < n && q[j + 1] == q[j]) ++j;
    if (j + 1 == n) return 0.0;
    const double slope = (Level(j + 1) - Level(j)) / (q[j + 1] - q[j]);
    f = Level(0) - (q[0] - x) * slope;
  } else {
    size_t j = n - 1;
    while (j > 0 && q[j - 1] == q[j]) --j;
    if (j == 0) return 1.0;
    const double slope = (Level(j) - Level(j - 1)) / (q[j] - q[j - 1]);
    f = Level(n - 1) + (x - q[n - 1]) * slope;
  }
  return std::clamp(f, 0.0, 1.0);
}

std::vector<HeadScore> RiskHeads(std::span<const double> q, bool exponential_tails) {
  std::vector<HeadScore> out;
  out.push_back({"1-median", OneMinusMedian(q)});
  out.push_back({"1-mean", OneMinusMean(q, exponential_tails)});
  for (double tau : kRiskThresholds) {
    char name[32];
    std::snprintf(name, sizeof(name), "P(rdtc<%g)", tau);
    out.push_back({name, CdfBelow(q, MapThreshold(tau))});
  }
  return out;
}

double QuantileFromBins(std::span<const double> probs, std::span<const double> borders, double alpha) {
  Require(!probs.empty() && borders.size() == probs.size() + 1,
          "quantile_from_bins: need B probabilities and B + 1 borders");
  Require(alpha > 0.0 && alpha < 1.0, "quantile_from_bins: alpha must lie in (0, 1)");
  Require(std::is_sorted(borders.begin(), borders.end()), "quantile_from_bins: borders not sorted");
  double c_prev = 0.0;
  for (size_t j = 0; j < probs.size(); ++j) {
    const double c = c_prev + probs[j];
    if (c >= alpha || j + 1 == probs.size()) {
      return borders[j] + (alpha - c_prev) / std::max(probs[j], 1e-12) * (borders[j + 1] - borders[j]);
    }
    c_prev = c;
  }
  return borders.back();
}

std::vector<double> Softmax(std::span<const double> logits) {
  Require(!logits.empty(), "softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double s = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) s += (out[i] = std::exp(logits[i] - m));
  for (double& v : out) v /= s;
  return out;
}

// ---------------------------------------------------------------------------
// AUROC.

double Auroc(std::span<const double> scores, std::span<const uint8_t> labels) {
  Require(scores.size() == labels.size(), "auroc: size mismatch");
  const size_t n = scores.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Twice the midrank keeps the rank sum integral.
  int64_t rank2_pos = 0;
  int64_t n_pos = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const int64_t r2 = static_cast<int64_t>(i + 1 + j);  // 2 * midrank of ranks i+1..j
    for (size_t t = i; t < j; ++t) {
      if (labels[idx[t]]) {
        rank2_pos += r2;
        ++n_pos;
      }
    }
    i = j;
  }
  const int64_t n_neg = static_cast<int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) Fail(ErrorKind::kData, "auroc: both classes must be present");
  const int64_t u2 = rank2_pos - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

BalancedAurocResult BalancedAuroc(CounterRng& rng, std::span<const double> scores,
                                  std::span<const uint8_t> labels, int k) {
  Require(scores.size() == labels.size(), "balanced_auroc: size mismatch");
  Require(k >= 1, "balanced_auroc: K must be >= 1");
  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) Fail(ErrorKind::kData, "balanced_auroc: both classes must be present");
  BalancedAurocResult r;
  r.n_pos = static_cast<int>(pos.size());
  r.n_neg = static_cast<int>(neg.size());
  if (pos.size() == neg.size()) {
    r.mean = Auroc(scores, labels);
    r.std = 0.0;
    return r;
  }
  const size_t n_min = std::min(pos.size(), neg.size());
  std::vector<double> sub_s(2 * n_min);
  std::vector<uint8_t> sub_l(2 * n_min);
  std::vector<double> values;
  for (int rep = 0; rep < k; ++rep) {
    // Partial Fisher-Yates on the larger class; the smaller one is taken whole.
    std::vector<size_t>& big = pos.size() > neg.size() ? pos : neg;
    for (size_t i = 0; i < n_min; ++i) {
      const size_t j = i + static_cast<size_t>(rng.Below(big.size() - i));
      std::swap(big[i], big[j]);
    }
    const std::vector<size_t>& small = pos.size() > neg.size() ? neg : pos;
    for (size_t i = 0; i < n_min; ++i) {
      sub_s[i] = scores[big[i]];
      sub_l[i] = labels[big[i]];
      sub_s[n_min + i] = scores[small[i]];
      sub_l[n_min + i] = labels[small[i]];
    }
    values.push_back(Auroc(sub_s, sub_l));
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  r.mean = mean;
  r.std = std::sqrt(ss / k);
  return r;
}

double HanleyMcNeilSe(double auroc, int64_t n_min_pooled) {
  Require(n_min_pooled > 0, "hanley_mcneil_se: n must be positive");
  Require(auroc >= 0.0 && auroc <= 1.0, "hanley_mcneil_se: A must lie in [0, 1]");
  return std::sqrt(auroc * (1.0 - auroc) / static_cast<double>(n_min_pooled));
}

double BalancedSubsampleSe(std::span<const double> per_point_stds, int k) {
  Require(!per_point_stds.empty(), "balanced_subsample_se: empty list");
  Require(k >= 1, "balanced_subsample_se: K must be >= 1");
  double ss = 0.0;
  for (double s : per_point_stds) ss += s * s;
  return std::sqrt(ss / k) / static_cast<double>(per_point_stds.size());
}

std::vector<RocPoint> RocCurve(std::span<const double> scores, std::span<const uint8_t> labels) {
  Require(scores.size() == labels.size(), "roc_curve: size mismatch");
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  double n_pos = 0, n_neg = 0;
  for (uint8_t l : labels) (l ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) Fail(ErrorKind::kData, "roc_curve: both classes must be present");
  std::vector<RocPoint> out;
  out.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  double tp = 0, fp = 0;
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    out.push_back({fp / n_neg, tp / n_pos, scores[idx[i]]});
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Score tables.

std::string ScoreTableCsv(const ScoreTable& table) {
  std::string s = "query_id,method,score,label,delta,window_len,system\n";
  for (const ScoreRecord& r : table) {
    s += r.query_id + ',' + r.method + ',' + Num(r.score) + ',' + (r.label ? "1" : "0") + ',' +
         std::to_string(r.delta) + ',' + std::to_string(r.window_len) + ',' + r.system + '\n';
  }
  return s;
}

ScoreTable ParseScoreTableCsv(std::string_view text) {
  const auto lines = Lines(text);
  if (lines.empty() || lines[0] != "query_id,method,score,label,delta,window_len,system") {
    Fail(ErrorKind::kData, "score table: missing or unexpected header");
  }
  ScoreTable out;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = SplitCsv(lines[i]);
    ScoreRecord r;
    int label = 0;
    if (f.size() != 7) Fail(ErrorKind::kData, LineError(i + 1, "expected 7 fields"));
    r.query_id = std::string(f[0]);
    r.method = std::string(f[1]);
    if (f[2] == "NA") {
      r.score = std::numeric_limits<double>::quiet_NaN();
    } else if (!ParseDouble(f[2], r.score)) {
      Fail(ErrorKind::kData, LineError(i + 1, "bad score"));
    }
    if (!ParseInt(f[3], label) || (label != 0 && label != 1)) {
      Fail(ErrorKind::kData, LineError(i + 1, "bad label"));
    }
    r.label = label == 1;
    if (!ParseInt(f[4], r.delta) || !ParseInt(f[5], r.window_len)) {
      Fail(ErrorKind::kData, LineError(i + 1, "bad delta or window_len"));
    }
    r.system = std::string(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

ScoreTable ScoreEws(std::span<const QueryWindow> windows, std::span<const Indicator> indicators,
                    std::optional<int> rolling_window, double rolling_factor) {
  ScoreTable out;
  for (const QueryWindow& w : windows) {
    const int rw = rolling_window ? *rolling_window : DefaultRollingWindow(w.window_len, rolling_factor);
    for (Indicator ind : indicators) {
      ScoreRecord r{w.query_id, EwsMethodName(w.window_len, ind), 0.0, w.label, w.delta,
                    w.window_len, w.system};
      try {
        r.score = EwsScore(w.values, rw, ind);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kData) throw;
        // Too few defined indicator points; the cell drops this query.
        r.score = std::numeric_limits<double>::quiet_NaN();
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<QuantilePrediction> ParsePredictionsCsv(std::string_view text) {
  const auto lines = Lines(text);
  if (lines.empty()) Fail(ErrorKind::kData, "predictions: empty file");
  const auto header = SplitCsv(lines[0]);
  bool ok = header.size() == 3 + kNumQuantiles && header[0] == "query_id" && header[1] == "scope" &&
            header[2] == "position";
  for (int j = 0; ok && j < kNumQuantiles; ++j) {
    char name[8];
    std::snprintf(name, sizeof(name), "q%03d", j + 1);
    ok = header[3 + j] == name;
  }
  if (!ok) Fail(ErrorKind::kData, LineError(1, "expected header query_id,scope,position,q001..q099"));
  std::vector<QuantilePrediction> out;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = SplitCsv(lines[i]);
    if (f.size() != 3 + kNumQuantiles) {
      Fail(ErrorKind::kData, LineError(i + 1, "expected " + std::to_string(3 + kNumQuantiles) +
                                                  " fields, got " + std::to_string(f.size())));
    }
    QuantilePrediction p;
    p.query_id = std::string(f[0]);
    if (p.query_id.empty()) Fail(ErrorKind::kData, LineError(i + 1, "empty query_id"));
    if (f[1] == "nowcast" || f[1] == "nc") {
      p.scope = "nc";
    } else if (f[1] == "forecast" || f[1] == "fc") {
      p.scope = "fc";
    } else {
      Fail(ErrorKind::kData, LineError(i + 1, "scope must be nowcast or forecast"));
    }
    if (!ParseInt(f[2], p.position) || p.position < 0) {
      Fail(ErrorKind::kData, LineError(i + 1, "bad position"));
    }
    for (int j = 0; j < kNumQuantiles; ++j) {
      if (!ParseDouble(f[3 + j], p.values[j]) || !std::isfinite(p.values[j])) {
        Fail(ErrorKind::kData, LineError(i + 1, "bad quantile value in column " + std::to_string(4 + j)));
      }
    }
    std::sort(p.values.begin(), p.values.end());
    out.push_back(std::move(p));
  }
  return out;
}

ScoreTable ScorePredictions(std::span<const QueryWindow> windows,
                            std::span<const QuantilePrediction> preds, std::string_view model,
                            bool exponential_tails) {
  std::unordered_map<std::string, const QueryWindow*> by_id;
  for (const QueryWindow& w : windows) by_id.emplace(w.query_id, &w);
  std::set<std::string> seen;
  std::set<std::pair<std::string, std::string>> seen_scope;
  ScoreTable out;
  for (const QuantilePrediction& p : preds) {
    const auto it = by_id.find(p.query_id);
    if (it == by_id.end()) Fail(ErrorKind::kData, "prediction for unknown query '" + p.query_id + "'");
    const QueryWindow& w = *it->second;
    const int expected = p.scope == "fc" ? kForecastHorizonRows - 1 : w.window_len - 1;
    if (p.position != expected) {
      Fail(ErrorKind::kData, "query '" + p.query_id + "' " + p.scope + " position " +
                                 std::to_string(p.position) + ", expected " + std::to_string(expected));
    }
    if (!seen_scope.emplace(p.query_id, p.scope).second) {
      Fail(ErrorKind::kData, "duplicate " + p.scope + " prediction for '" + p.query_id + "'");
    }
    seen.insert(p.query_id);
    for (const HeadScore& h : RiskHeads(p.values, exponential_tails)) {
      out.push_back({w.query_id, std::string(model) + ":" + p.scope + ":" + h.head, h.score, w.label,
                     w.delta, w.window_len, w.system});
    }
  }
  for (const QueryWindow& w : windows) {
    if (!seen.count(w.query_id)) Fail(ErrorKind::kData, "missing prediction for query '" + w.query_id + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

Report MacroAuroc(const ScoreTable& table, bool positive_deltas_only, uint64_t seed, int k) {
  Require(!table.empty(), "macro_auroc: empty score table");
  using Key = std::tuple<std::string, std::string, int>;
  std::map<Key, std::vector<const ScoreRecord*>> rows;
  for (const ScoreRecord& r : table) {
    auto& g = rows[Key{r.system, r.method, r.delta}];
    if (!std::isnan(r.score)) g.push_back(&r);
  }
  // Subsamples index into the cell, so fix its order independently of the
  // input row order.
  std::map<Key, std::pair<std::vector<double>, std::vector<uint8_t>>> groups;
  for (auto& [key, recs] : rows) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const ScoreRecord* a, const ScoreRecord* b) { return a->query_id < b->query_id; });
    auto& g = groups[key];
    for (const ScoreRecord* r : recs) {
      g.first.push_back(r->score);
      g.second.push_back(r->label ? 1 : 0);
    }
  }
  Report rep;
  struct Acc {
    std::vector<double> means, stds;
    int missing = 0;
    int64_t n_min = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> per;
  for (const auto& [key, g] : groups) {
    const auto& [system, method, delta] = key;
    CellResult c{system, method, delta, std::nullopt};
    const bool has_pos = std::find(g.second.begin(), g.second.end(), 1) != g.second.end();
    const bool has_neg = std::find(g.second.begin(), g.second.end(), 0) != g.second.end();
    if (has_pos && has_neg) {
      CounterRng rng(DeriveSeed(DeriveSeed(DeriveSeed(seed, system), method),
                                "delta", static_cast<uint64_t>(static_cast<int64_t>(delta))));
      c.auroc = BalancedAuroc(rng, g.first, g.second, k);
    }
    if (!positive_deltas_only || delta > 0) {
      Acc& a = per[{system, method}];
      if (c.auroc) {
        a.means.push_back(c.auroc->mean);
        a.stds.push_back(c.auroc->std);
        a.n_min += std::min(c.auroc->n_pos, c.auroc->n_neg);
      } else {
        ++a.missing;
      }
    }
    rep.cells.push_back(std::move(c));
  }
  std::map<std::string, std::vector<const MacroResult*>> by_method;
  for (const auto& [key, a] : per) {
    MacroResult m;
    m.system = key.first;
    m.method = key.second;
    m.cells = static_cast<int>(a.means.size());
    m.missing_cells = a.missing;
    m.n_min_pooled = a.n_min;
    if (!a.means.empty()) {
      m.auroc = std::accumulate(a.means.begin(), a.means.end(), 0.0) / static_cast<double>(a.means.size());
      m.se_hm = HanleyMcNeilSe(std::clamp(*m.auroc, 0.0, 1.0), a.n_min);
      m.se_bs = BalancedSubsampleSe(a.stds, k);
    }
    rep.macro.push_back(std::move(m));
  }
  // "All datasets": unweighted mean over systems with a defined macro value.
  std::map<std::string, MacroResult> all;
  std::map<std::string, int> defined;
  for (const MacroResult& m : rep.macro) {
    MacroResult& a = all[m.method];
    a.system = std::string(kAllDatasets);
    a.method = m.method;
    a.cells += m.cells;
    a.missing_cells += m.missing_cells;
    a.n_min_pooled += m.n_min_pooled;
    if (m.auroc) {
      a.auroc = a.auroc.value_or(0.0) + *m.auroc;
      ++defined[m.method];
    }
  }
  for (auto& [method, a] : all) {
    if (a.auroc) {
      a.auroc = *a.auroc / defined[method];
      a.se_hm = HanleyMcNeilSe(std::clamp(*a.auroc, 0.0, 1.0), a.n_min_pooled);
      std::vector<double> stds;
      for (const CellResult& c : rep.cells) {
        if (c.method == method && c.auroc && (!positive_deltas_only || c.delta > 0)) {
          stds.push_back(c.auroc->std);
        }
      }
      a.se_bs = BalancedSubsampleSe(stds, k);
    }
    rep.macro.push_back(std::move(a));
  }
  return rep;
}

std::string CellsCsv(const Report& r) {
  std::string s = "system,method,delta,auroc,auroc_std,n_pos,n_neg\n";
  for (const CellResult& c : r.cells) {
    s += c.system + ',' + c.method + ',' + std::to_string(c.delta) + ',';
    if (c.auroc) {
      s += Num(c.auroc->mean) + ',' + Num(c.auroc->std) + ',' + std::to_string(c.auroc->n_pos) + ',' +
           std::to_string(c.auroc->n_neg);
    } else {
      s += "NA,NA,NA,NA";
    }
    s += '\n';
  }
  return s;
}

std::string MacroLongCsv(const Report& r) {
  std::string s = "system,method,auroc,se_hm,se_bs,cells,missing_cells,n_min_pooled\n";
  for (const MacroResult& m : r.macro) {
    s += m.system + ',' + m.method + ',';
    if (m.auroc) {
      s += Num(*m.auroc) + ',' + Num(m.se_hm) + ',' + Num(m.se_bs);
    } else {
      s += "NA,NA,NA";
    }
    s += ',' + std::to_string(m.cells) + ',' + std::to_string(m.missing_cells) + ',' +
         std::to_string(m.n_min_pooled) + '\n';
  }
  return s;
}

std::string MacroWideCsv(const Report& r) {
  std::vector<std::string> systems, methods;
  std::map<std::pair<std::string, std::string>, const MacroResult*> at;
  for (const MacroResult& m : r.macro) {
    if (std::find(systems.begin(), systems.end(), m.system) == systems.end()) systems.push_back(m.system);
    if (std::find(methods.begin(), methods.end(), m.method) == methods.end()) methods.push_back(m.method);
    at[{m.system, m.method}] = &m;
  }
  std::sort(methods.begin(), methods.end());
  std::string s = "system";
  for (const std::string& m : methods) s += ',' + m + ',' + m + "_se_hm," + m + "_se_bs";
  s += '\n';
  for (const std::string& sys : systems) {
    s += sys;
    for (const std::string& m : methods) {
      const auto it = at.find({sys, m});
      if (it == at.end() || !it->second->auroc) {
        s += ",NA,NA,NA";
      } else {
        s += ',' + Short(*it->second->auroc) + ',' + Short(it->second->se_hm) + ',' + Short(it->second->se_bs);
      }
    }
    s += '\n';
  }
  return s;
}

std::string RocCsv(std::span<const RocPoint> pts) {
  std::string s = "fpr,tpr,threshold\n";
  for (const RocPoint& p : pts) {
    s += Num(p.fpr) + ',' + Num(p.tpr) + ',' + (std::isinf(p.threshold) ? "inf" : Num(p.threshold)) + '\n';
  }
  return s;
}

}  // namespace tipbench
