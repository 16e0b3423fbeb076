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

#ifndef TIPBENCH_RNG_HPP_
#define TIPBENCH_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace tipbench {

// FNV-1a, 64 bit. Used for stream labels and artifact hashes.
uint64_t Fnv1a64(std::string_view bytes, uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer.
uint64_t Mix64(uint64_t z);

// Child seed for the sub-stream named `label` (and optional index) of
// `parent`. Distinct labels give statistically independent streams.
uint64_t DeriveSeed(uint64_t parent, std::string_view label, uint64_t index = 0);

// Counter-based generator "tb-ctr64", version 1.
//
// Output n (n = 1, 2, ...) of key K is Mix64(K + n * 0x9E3779B97F4A7C15).
// The state is (key, counter) so any position of a stream can be reached
// directly, and two generators with different keys never share state.
class CounterRng {
 public:
  using result_type = uint64_t;
  static constexpr std::string_view kName = "tb-ctr64";
  static constexpr int kVersion = 1;

  explicit CounterRng(uint64_t key, uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

  // Generator for sub-stream (label, index) of this generator's key.
  CounterRng Child(std::string_view label, uint64_t index = 0) const {
    return CounterRng(DeriveSeed(key_, label, index));
  }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform on (0, 1).
  double UniformOpen();
  // Uniform integer in [0, n); n > 0.
  uint64_t Below(uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }
  // Standard normal (Box-Muller; the second variate of each pair is cached).
  double Normal();
  // |tan(pi u / 2)| * scale, u ~ U(0, 1).
  double HalfCauchy(double scale);
  // Inverse-CDF triangular distribution on [lo, hi] with the given mode.
  double Triangular(double lo, double mode, double hi);
  // Index drawn proportionally to non-negative weights (sum > 0).
  size_t Categorical(std::span<const double> weights);

 private:
  uint64_t key_;
  uint64_t counter_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tipbench

#endif  // TIPBENCH_RNG_HPP_
