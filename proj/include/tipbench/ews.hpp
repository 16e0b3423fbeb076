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

#ifndef TIPBENCH_EWS_HPP_
#define TIPBENCH_EWS_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tipbench {

enum class Indicator { kVar, kAr1, kAcf, kSkw, kLambd };
std::string_view IndicatorName(Indicator ind);
Indicator IndicatorFromName(std::string_view name);  // throws kConfig
std::span<const Indicator> AllIndicators();

// Floor applied to the AR1 estimate before taking the log for lambd.
inline constexpr double kLambdFloor = 1e-6;

// Single-window statistics. NaN marks an undefined value (zero variance).
double WindowVariance(std::span<const double> w);  // unbiased
double WindowAr1(std::span<const double> w);       // single pooled mean
double WindowAcf(std::span<const double> w);       // separate lagged means
double WindowSkewness(std::span<const double> w);  // adjusted Fisher-Pearson
double WindowIndicator(std::span<const double> w, Indicator ind);

// Trailing windows; element i covers signal[i, i + window_len) and aligns to
// the window end. Length signal.size() - window_len + 1.
std::vector<double> RollingIndicator(std::span<const double> signal, int window_len, Indicator ind);

// Kendall tau-b of x against its index, O(n log n). NaN entries are dropped.
// All-tied input returns 0 and sets *degenerate.
double KendallTau(std::span<const double> x, bool* degenerate = nullptr);

// Rolling window used when none is given: max(8, floor(factor * W)).
int DefaultRollingWindow(int query_window, double factor = 0.5);

// Kendall tau of the rolling indicator. Throws kData with fewer than 5
// defined indicator points.
double EwsScore(std::span<const double> signal, int window_len, Indicator ind);

// "dews:w<N>:<indicator>_tau".
std::string EwsMethodName(int query_window, Indicator ind);

}  // namespace tipbench

#endif  // TIPBENCH_EWS_HPP_
