// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spectralkd {

/// Oriented-grating images with labels. Image i occupies
/// `pixels[i*side*side, (i+1)*side*side)`, row-major.
struct Dataset {
  std::size_t side = 16;
  std::vector<double> pixels;
  std::vector<std::size_t> labels;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::span<const double> image(std::size_t i) const noexcept {
    return std::span<const double>(pixels).subspan(i * side * side, side * side);
  }
  bool operator==(const Dataset&) const = default;
};

inline constexpr std::size_t kSynthClasses = 10;
inline constexpr std::size_t kSynthSide = 16;

/// Ten-class 16x16 grating set. Class c has orientation c*pi/10 and
/// frequency 3; labels cycle 0..9; each pixel gets `noise` times a standard
/// normal draw from SplitMix64(seed).
Dataset synth_dataset(std::uint64_t seed, std::size_t count, double noise = 0.1);

/// Samples [first, first + count) as a new dataset.
Dataset slice(const Dataset& data, std::size_t first, std::size_t count);

}  // namespace spectralkd
