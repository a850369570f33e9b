// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spectralkd/fft.hpp"
#include "spectralkd/tensor.hpp"

namespace spectralkd {

/// Mean channel-frequency magnitude of one layer: entry k is the magnitude
/// of frequency bin k averaged over every (batch, row, column) position.
struct ChannelSpectrum {
  std::vector<double> values;
  std::size_t layer_index = 1;
};

/// One aggregate intensity per layer, in depth order.
struct ModelProfile {
  std::vector<double> intensities;
  std::vector<std::string> labels;  // optional, empty or one per layer

  [[nodiscard]] std::size_t layer_count() const noexcept { return intensities.size(); }
};

/// Paired teacher and student layer indices (1-based, ascending).
struct LayerSelection {
  std::vector<std::size_t> teacher_layers;
  std::vector<std::size_t> student_layers;

  bool operator==(const LayerSelection&) const = default;
};

struct HistogramBin {
  double lower = 0.0;
  std::size_t count = 0;
};

struct Histogram {
  std::vector<HistogramBin> bins;
  double width = 0.0;
  /// Set when every intensity is equal; `bins` then holds a single bin.
  bool degenerate = false;
};

/// Elementwise sqrt(re^2 + im^2).
std::vector<double> magnitude(const ComplexTensor& f);

ChannelSpectrum channel_spectrum(const FeatureMap& x, std::size_t layer_index);

/// Mean of the spectrum entries.
double layer_intensity(const ChannelSpectrum& s);

ModelProfile model_profile(std::span<const FeatureMap> layers);

/// Uniform bins over [min, max]; the maximum falls in the last bin.
Histogram intensity_histogram(const ModelProfile& p, std::size_t bins);

/// The k layers with the largest intensity, ties going to the lower index,
/// returned ascending and 1-based. Throws KOutOfRange unless 1 <= k <= n.
std::vector<std::size_t> select_layers_topk(const ModelProfile& p, std::size_t k);

/// Maps teacher layers onto a shallower student. Teacher layer i counts as
/// "head" when 2*i <= n_teacher and as "tail" otherwise; heads map onto the
/// first student layers and tails onto the last ones. Throws BudgetExceeded
/// when the student has too few layers.
LayerSelection map_student_layers(std::span<const std::size_t> teacher_layers,
                                  std::size_t n_teacher, std::size_t n_student);

/// Scale-free gap between two profiles: each is divided by its maximum, the
/// shorter one is linearly resampled onto the longer grid (endpoints
/// pinned), and the mean absolute difference is returned.
double profile_distance(const ModelProfile& teacher, const ModelProfile& student);

/// Per-layer record written to profile.json and spectra.csv.
struct LayerReport {
  std::size_t index = 1;
  double intensity = 0.0;
  std::vector<double> spectrum;
};

std::vector<LayerReport> analyze_layers(std::span<const FeatureMap> layers);

/// `{"layers":[{"index":k,"intensity":l,"spectrum":[...]}]}`
std::string profile_to_json(std::span<const LayerReport> layers);
/// Accepts documents written by `profile_to_json`; `spectrum` may be absent.
std::vector<LayerReport> profile_from_json(const std::string& text);
/// One row per layer: index, intensity, spectrum values. No header.
std::string spectra_to_csv(std::span<const LayerReport> layers);

ModelProfile to_profile(std::span<const LayerReport> layers);

}  // namespace spectralkd
