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

#include "tipbench/ews.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "tipbench/error.hpp"

namespace tipbench {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<Indicator, 5> kAll = {Indicator::kVar, Indicator::kAr1, Indicator::kAcf,
                                           Indicator::kSkw, Indicator::kLambd};

bool Constant(std::span<const double> w) {
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  return *lo == *hi;
}

double Mean(std::span<const double> w) {
  double s = 0.0;
  for (double v : w) s += v;
  return s / static_cast<double>(w.size());
}

// Counts pairs i < j with x[i] > x[j] while sorting x[lo, hi).
int64_t MergeCount(std::vector<double>& x, std::vector<double>& buf, size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  int64_t inv = MergeCount(x, buf, lo, mid) + MergeCount(x, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (x[i] <= x[j]) {
      buf[k++] = x[i++];
    } else {
      inv += static_cast<int64_t>(mid - i);
      buf[k++] = x[j++];
    }
  }
  while (i < mid) buf[k++] = x[i++];
  while (j < hi) buf[k++] = x[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            x.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

std::string_view IndicatorName(Indicator ind) {
  switch (ind) {
    case Indicator::kVar:
      return "var";
    case Indicator::kAr1:
      return "ar1";
    case Indicator::kAcf:
      return "acf";
    case Indicator::kSkw:
      return "skw";
    case Indicator::kLambd:
      return "lambd";
  }
  return "var";
}

Indicator IndicatorFromName(std::string_view name) {
  for (Indicator ind : kAll) {
    if (IndicatorName(ind) == name) return ind;
  }
  Fail(ErrorKind::kConfig, "unknown indicator '" + std::string(name) + "'");
}

std::span<const Indicator> AllIndicators() { return kAll; }

double WindowVariance(std::span<const double> w) {
  Require(w.size() >= 2, "variance: window needs >= 2 samples");
  if (Constant(w)) return 0.0;
  const double m = Mean(w);
  double ss = 0.0;
  for (double v : w) ss += (v - m) * (v - m);
  return ss / static_cast<double>(w.size() - 1);
}

double WindowAr1(std::span<const double> w) {
  Require(w.size() >= 2, "ar1: window needs >= 2 samples");
  if (Constant(w)) return kNaN;
  const double m = Mean(w);
  double num = 0.0, den = 0.0;
  for (size_t t = 0; t < w.size(); ++t) {
    den += (w[t] - m) * (w[t] - m);
    if (t > 0) num += (w[t] - m) * (w[t - 1] - m);
  }
  return num / den;
}

double WindowAcf(std::span<const double> w) {
  Require(w.size() >= 3, "acf: window needs >= 3 samples");
  const auto head = w.first(w.size() - 1);
  const auto tail = w.subspan(1);
  if (Constant(head) || Constant(tail)) return kNaN;
  const double m0 = Mean(head), m1 = Mean(tail);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t t = 0; t < head.size(); ++t) {
    const double a = head[t] - m0, b = tail[t] - m1;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return sxy / std::sqrt(sxx * syy);
}

double WindowSkewness(std::span<const double> w) {
  Require(w.size() >= 3, "skewness: window needs >= 3 samples");
  if (Constant(w)) return kNaN;
  const double n = static_cast<double>(w.size());
  const double m = Mean(w);
  double m2 = 0.0, m3 = 0.0;
  for (double v : w) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  const double g1 = m3 / std::pow(m2, 1.5);
  return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

double WindowIndicator(std::span<const double> w, Indicator ind) {
  switch (ind) {
    case Indicator::kVar:
      return WindowVariance(w);
    case Indicator::kAr1:
      return WindowAr1(w);
    case Indicator::kAcf:
      return WindowAcf(w);
    case Indicator::kSkw:
      return WindowSkewness(w);
    case Indicator::kLambd: {
      const double a = WindowAr1(w);
      return std::isnan(a) ? kNaN : std::log(std::max(a, kLambdFloor));
    }
  }
  return kNaN;
}

std::vector<double> RollingIndicator(std::span<const double> signal, int window_len, Indicator ind) {
  Require(window_len >= 4, "rolling_indicator: window_len must be >= 4");
  Require(signal.size() >= static_cast<size_t>(window_len),
          "rolling_indicator: signal shorter than the window");
  const size_t w = static_cast<size_t>(window_len);
  std::vector<double> out(signal.size() - w + 1);
  for (size_t i = 0; i < out.size(); ++i) out[i] = WindowIndicator(signal.subspan(i, w), ind);
  return out;
}

double KendallTau(std::span<const double> x, bool* degenerate) {
  std::vector<double> v;
  v.reserve(x.size());
  for (double d : x) {
    if (!std::isnan(d)) v.push_back(d);
  }
  if (degenerate) *degenerate = false;
  const int64_t n = static_cast<int64_t>(v.size());
  Require(n >= 2, "kendall_tau: need >= 2 defined values");
  std::vector<double> buf(v.size());
  const int64_t discordant = MergeCount(v, buf, 0, v.size());
  // v is sorted now; count tied pairs.
  int64_t ties = 0;
  for (size_t i = 0; i < v.size();) {
    size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const int64_t t = static_cast<int64_t>(j - i);
    ties += t * (t - 1) / 2;
    i = j;
  }
  const int64_t n0 = n * (n - 1) / 2;
  if (ties == n0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const int64_t concordant = n0 - ties - discordant;
  return static_cast<double>(concordant - discordant) /
         std::sqrt(static_cast<double>(n0 - ties) * static_cast<double>(n0));
}

int DefaultRollingWindow(int query_window, double factor) {
  return std::max(8, static_cast<int>(std::floor(factor * query_window)));
}

double EwsScore(std::span<const double> signal, int window_len, Indicator ind) {
  if (window_len < 4 || signal.size() < static_cast<size_t>(window_len)) {
    Fail(ErrorKind::kData, "ews_score: insufficient data for the rolling window");
  }
  const std::vector<double> series = RollingIndicator(signal, window_len, ind);
  const auto defined = std::count_if(series.begin(), series.end(), [](double d) { return !std::isnan(d); });
  if (defined < 5) Fail(ErrorKind::kData, "ews_score: fewer than 5 indicator points");
  return KendallTau(series);
}

std::string EwsMethodName(int query_window, Indicator ind) {
  return "dews:w" + std::to_string(query_window) + ":" + std::string(IndicatorName(ind)) + "_tau";
}

}  // namespace tipbench
