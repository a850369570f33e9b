// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/dataset.hpp"

#include <cmath>
#include <numbers>

#include "spectralkd/error.hpp"
#include "spectralkd/rng.hpp"

namespace spectralkd {

Dataset synth_dataset(std::uint64_t seed, std::size_t count, double noise) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "dataset count must be >= 1");
  constexpr double kFrequency = 3.0;
  constexpr std::size_t side = kSynthSide;

  SplitMix64 rng(seed);
  Dataset out;
  out.side = side;
  out.pixels.resize(count * side * side);
  out.labels.resize(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    const std::size_t label = idx % kSynthClasses;
    const double theta = static_cast<double>(label) * std::numbers::pi / 10.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    out.labels[idx] = label;
    double* img = out.pixels.data() + idx * side * side;
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        const double phase = 2.0 * std::numbers::pi * kFrequency *
                             (static_cast<double>(i) * ct + static_cast<double>(j) * st) /
                             static_cast<double>(side);
        img[i * side + j] = std::sin(phase) + noise * rng.normal();
      }
    }
  }
  return out;
}

Dataset slice(const Dataset& data, std::size_t first, std::size_t count) {
  if (first + count > data.size()) throw Error(ErrorCode::InvalidArgument, "slice out of range");
  const std::size_t px = data.side * data.side;
  Dataset out;
  out.side = data.side;
  out.pixels.assign(data.pixels.begin() + static_cast<std::ptrdiff_t>(first * px),
                    data.pixels.begin() + static_cast<std::ptrdiff_t>((first + count) * px));
  out.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(first),
                    data.labels.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

}  // namespace spectralkd
