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

#include "tipbench/rng.hpp"

#include <cmath>
#include <numbers>

#include "tipbench/error.hpp"

namespace tipbench {
namespace {
constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}  // namespace

uint64_t Fnv1a64(std::string_view bytes, uint64_t basis) {
  uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

uint64_t DeriveSeed(uint64_t parent, std::string_view label, uint64_t index) {
  return Mix64(Mix64(parent ^ Fnv1a64(label)) + Mix64(index + kGamma));
}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return Mix64(key_ + counter_ * kGamma);
}

double CounterRng::Uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::UniformOpen() {
  return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
}

uint64_t CounterRng::Below(uint64_t n) {
  Require(n > 0, "Below: n must be positive");
  // Lemire's multiply-shift with rejection.
  uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  uint64_t low = static_cast<uint64_t>(m);
  if (low < n) {
    const uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<uint64_t>(m >> 64);
}

double CounterRng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = UniformOpen();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

double CounterRng::HalfCauchy(double scale) {
  return std::fabs(std::tan(std::numbers::pi * UniformOpen() / 2.0)) * scale;
}

double CounterRng::Triangular(double lo, double mode, double hi) {
  Require(lo < hi && lo <= mode && mode <= hi, "Triangular: need lo <= mode <= hi, lo < hi");
  const double u = Uniform();
  const double f = (mode - lo) / (hi - lo);
  if (u < f) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
  return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
}

size_t CounterRng::Categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    Require(w >= 0.0 && std::isfinite(w), "Categorical: weights must be finite and >= 0");
    total += w;
  }
  Require(total > 0.0, "Categorical: weights sum to zero");
  const double u = Uniform() * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u == total; return the last positive weight.
  for (size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace tipbench
