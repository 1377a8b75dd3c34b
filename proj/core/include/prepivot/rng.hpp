// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace prepivot {

/// Philox4x32-10 block function: a bijection of a 128-bit counter under a
/// 64-bit key.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Stream domains keep independent consumers of one master seed apart.
enum class StreamDomain : std::uint8_t {
  assignment = 1,   // draws from the assignment space
  gaussian = 2,     // Monte Carlo Gaussian measures
  population = 3,   // generative models in the simulation harness
  observed = 4,     // the observed assignment drawn in simulations
  validation = 5,   // criterion validation spot-checks
};

/// 64-bit stream identifier: domain in the top byte, a 56-bit index below.
constexpr std::uint64_t stream_id(StreamDomain domain, std::uint64_t index) noexcept {
  return (static_cast<std::uint64_t>(domain) << 56) | (index & ((std::uint64_t{1} << 56) - 1));
}

/// Gaussian substream for (assignment slot, analysis slot). The analysis slot
/// occupies bits 40..55 so up to 2^40 assignment slots fit below it.
constexpr std::uint64_t gaussian_stream(std::uint64_t assignment_slot,
                                        std::uint64_t analysis_slot) noexcept {
  return stream_id(StreamDomain::gaussian,
                   (analysis_slot << 40) | (assignment_slot & ((std::uint64_t{1} << 40) - 1)));
}

/// SplitMix64 finalizer; used to derive child seeds (e.g. per simulation).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

/// Counter-based generator: the output sequence is a pure function of
/// (seed, stream), so any stream can be regenerated on any thread.
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (position_ == 2) refill();
    return buffer_[position_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  unsigned position_ = 2;
};

}  // namespace prepivot
