// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>

namespace spectralkd {

/// One SplitMix64 step: returns (next state, output).
std::pair<std::uint64_t, std::uint64_t> prng_next(std::uint64_t state) noexcept;

/// Seeded SplitMix64 stream. Everything random in training draws from one
/// of these so a run is reproducible from its seed alone.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform in (0, 1].
  double uniform_open() noexcept;
  /// Standard normal via Box-Muller (one draw per call, two uniforms consumed).
  double normal() noexcept;
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

  [[nodiscard]] std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Derives an independent seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace spectralkd
