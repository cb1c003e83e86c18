/* Copyright 2026 The ALLoRA Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ALLORA_RNG_HPP_
#define ALLORA_RNG_HPP_

#include <array>
#include <cstddef>
#include <cstdint>

namespace allora {

/// Philox4x32-10 counter-based generator. The 64-bit seed is the key; the
/// 128-bit counter is split into a stream id and a position, so `split(i)`
/// yields a statistically independent generator for the i-th sub-task
/// without touching this one. Output depends only on (seed, stream path).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Child stream `index` of this stream. Pure: does not advance *this.
  CounterRng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  /// True with probability p.
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Stateless 64-bit mixer (SplitMix64 finaliser).
std::uint64_t mix64(std::uint64_t x);

namespace detail {
// Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);
}  // namespace detail

}  // namespace allora

#endif  // ALLORA_RNG_HPP_
