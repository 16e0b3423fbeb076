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

// Box constants for the two-variable AMOC reduction (FAMOUS-calibrated
// five-box model with Southern Ocean and bottom salinities held fixed and
// the Indo-Pacific salinity closed by salt conservation).
//
// Units: volumes m^3, fluxes and exchange rates Sv, salinities psu,
// temperatures degC, lambda m^6 kg^-1 s^-1, alpha kg m^-3 K^-1,
// beta kg m^-3 psu^-1, mu degC m^-3 s. Model time is in years.

#ifndef TIPBENCH_AMOC_CONSTANTS_HPP_
#define TIPBENCH_AMOC_CONSTANTS_HPP_

#include <string_view>

namespace tipbench::amoc {

inline constexpr std::string_view kVersion = "famous-b-2box/1";

inline constexpr double kVN = 0.3683e17;
inline constexpr double kVT = 0.5418e17;
inline constexpr double kVS = 0.6097e17;
inline constexpr double kVIP = 1.4860e17;
inline constexpr double kVB = 9.9250e17;

inline constexpr double kFN = 0.486;
inline constexpr double kFT = -0.997;
inline constexpr double kAN = 0.070;
inline constexpr double kAT = 0.752;

inline constexpr double kSS = 34.427;
inline constexpr double kSB = 34.538;
inline constexpr double kSIP0 = 34.668;
inline constexpr double kSN0 = 34.912;
inline constexpr double kST0 = 35.435;

inline constexpr double kLambda = 1.62e7;
inline constexpr double kAlpha = 0.12;
inline constexpr double kBeta = 0.79;
inline constexpr double kS0 = 35.0;
inline constexpr double kKN = 1.762;
inline constexpr double kKS = 1.872;
inline constexpr double kGamma = 0.36;
inline constexpr double kTS = 7.919;
inline constexpr double kT0 = 3.87;
inline constexpr double kMu = 22e-8;

// Multiplies A_N and A_T. Calibrated so the on-branch fold sits at the
// published critical hosing; the unscaled set folds at H = 0.4385.
inline constexpr double kHosingScale = 1.0352127697244924;
inline constexpr double kFoldH = 0.4236;

}  // namespace tipbench::amoc

#endif  // TIPBENCH_AMOC_CONSTANTS_HPP_
