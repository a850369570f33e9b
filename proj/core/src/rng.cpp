// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/rng.hpp"

#include <cmath>
#include <numbers>

namespace spectralkd {

std::pair<std::uint64_t, std::uint64_t> prng_next(std::uint64_t state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return {state, z ^ (z >> 31)};
}

std::uint64_t SplitMix64::next() noexcept {
  auto [s, out] = prng_next(state_);
  state_ = s;
  return out;
}

double SplitMix64::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform_open() noexcept {
  return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
}

double SplitMix64::normal() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v;
  do {
    v = next();
  } while (v >= limit);
  return v % bound;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return prng_next(seed ^ (stream * 0xD1B54A32D192ED03ULL)).second;
}

}  // namespace spectralkd
