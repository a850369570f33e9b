// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "spectralkd/error.hpp"

namespace spectralkd {

std::vector<double> magnitude(const ComplexTensor& f) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(f.re[i], f.im[i]);
  return out;
}

ChannelSpectrum channel_spectrum(const FeatureMap& x, std::size_t layer_index) {
  const auto& d = x.dims();
  const auto mag = magnitude(fft_channels(x));
  const std::size_t hw = d.plane();
  ChannelSpectrum s;
  s.layer_index = layer_index;
  s.values.assign(d.channels, 0.0);
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t c = 0; c < d.channels; ++c) {
      const double* row = mag.data() + (b * d.channels + c) * hw;
      s.values[c] += std::accumulate(row, row + hw, 0.0);
    }
  }
  const double count = static_cast<double>(d.batch * hw);
  for (auto& v : s.values) v /= count;
  return s;
}

double layer_intensity(const ChannelSpectrum& s) {
  if (s.values.empty()) throw Error(ErrorCode::InvalidArgument, "empty channel spectrum");
  return std::accumulate(s.values.begin(), s.values.end(), 0.0) /
         static_cast<double>(s.values.size());
}

ModelProfile model_profile(std::span<const FeatureMap> layers) {
  if (layers.empty()) throw Error(ErrorCode::InvalidArgument, "model_profile needs >= 1 layer");
  ModelProfile p;
  p.intensities.reserve(layers.size());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    p.intensities.push_back(layer_intensity(channel_spectrum(layers[k], k + 1)));
  }
  return p;
}

Histogram intensity_histogram(const ModelProfile& p, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs >= 1 bin");
  if (p.intensities.empty()) throw Error(ErrorCode::InvalidArgument, "empty profile");
  const auto [lo_it, hi_it] = std::minmax_element(p.intensities.begin(), p.intensities.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  Histogram h;
  if (lo == hi) {
    h.degenerate = true;
    h.bins.push_back({lo, p.intensities.size()});
    return h;
  }
  h.width = (hi - lo) / static_cast<double>(bins);
  h.bins.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) h.bins[i].lower = lo + static_cast<double>(i) * h.width;
  for (double v : p.intensities) {
    auto idx = static_cast<std::size_t>((v - lo) / h.width);
    h.bins[std::min(idx, bins - 1)].count += 1;
  }
  return h;
}

std::vector<std::size_t> select_layers_topk(const ModelProfile& p, std::size_t k) {
  const std::size_t n = p.layer_count();
  if (k < 1 || k > n) {
    throw Error(ErrorCode::KOutOfRange,
                "k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.intensities[a] > p.intensities[b];
  });
  std::vector<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(picked.begin(), picked.end());
  for (auto& i : picked) i += 1;
  return picked;
}

LayerSelection map_student_layers(std::span<const std::size_t> teacher_layers,
                                  std::size_t n_teacher, std::size_t n_student) {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::size_t prev = 0;
  for (auto i : teacher_layers) {
    if (i < 1 || i > n_teacher || i <= prev) {
      throw Error(ErrorCode::InvalidArgument,
                  "teacher layers must be strictly increasing within [1, " +
                      std::to_string(n_teacher) + "]");
    }
    prev = i;
    (2 * i <= n_teacher ? head : tail) += 1;
  }
  if (head + tail > n_student) {
    throw Error(ErrorCode::BudgetExceeded, std::to_string(head + tail) +
                                               " teacher layers cannot map onto " +
                                               std::to_string(n_student) + " student layers");
  }
  LayerSelection sel;
  sel.teacher_layers.assign(teacher_layers.begin(), teacher_layers.end());
  for (std::size_t i = 1; i <= head; ++i) sel.student_layers.push_back(i);
  for (std::size_t i = n_student - tail + 1; i <= n_student; ++i) sel.student_layers.push_back(i);
  return sel;
}

namespace {

std::vector<double> normalized(const ModelProfile& p) {
  if (p.intensities.empty()) throw Error(ErrorCode::ZeroProfile, "empty profile");
  const double peak = *std::max_element(p.intensities.begin(), p.intensities.end());
  if (!(peak > 0.0)) throw Error(ErrorCode::ZeroProfile, "profile maximum is not positive");
  std::vector<double> out(p.intensities);
  for (auto& v : out) v /= peak;
  return out;
}

// Linear resampling of `v` onto `m` points with both endpoints kept.
std::vector<double> resample(const std::vector<double>& v, std::size_t m) {
  if (v.size() == m) return v;
  std::vector<double> out(m);
  if (v.size() == 1) {
    std::fill(out.begin(), out.end(), v[0]);
    return out;
  }
  const double scale = static_cast<double>(v.size() - 1) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = static_cast<double>(i) * scale;
    const auto left = std::min(static_cast<std::size_t>(pos), v.size() - 2);
    const double frac = pos - static_cast<double>(left);
    out[i] = v[left] + frac * (v[left + 1] - v[left]);
  }
  return out;
}

}  // namespace

double profile_distance(const ModelProfile& teacher, const ModelProfile& student) {
  auto a = normalized(teacher);
  auto b = normalized(student);
  const std::size_t m = std::max(a.size(), b.size());
  a = resample(a, m);
  b = resample(b, m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(m);
}

std::vector<LayerReport> analyze_layers(std::span<const FeatureMap> layers) {
  std::vector<LayerReport> out;
  out.reserve(layers.size());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto s = channel_spectrum(layers[k], k + 1);
    const double l = layer_intensity(s);
    out.push_back({k + 1, l, std::move(s.values)});
  }
  return out;
}

std::string profile_to_json(std::span<const LayerReport> layers) {
  nlohmann::ordered_json doc;
  doc["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : layers) {
    nlohmann::ordered_json entry;
    entry["index"] = l.index;
    entry["intensity"] = l.intensity;
    entry["spectrum"] = l.spectrum;
    doc["layers"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::vector<LayerReport> profile_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("profile JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array()) {
    throw Error(ErrorCode::InvalidConfig, "profile JSON: missing array 'layers'");
  }
  std::vector<LayerReport> out;
  for (std::size_t i = 0; i < doc["layers"].size(); ++i) {
    const auto& e = doc["layers"][i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("index") || !e["index"].is_number_unsigned() ||
        !e.contains("intensity") || !e["intensity"].is_number()) {
      throw Error(ErrorCode::InvalidConfig, "profile JSON: " + where + " needs index and intensity");
    }
    LayerReport r;
    r.index = e["index"].get<std::size_t>();
    r.intensity = e["intensity"].get<double>();
    if (e.contains("spectrum")) {
      if (!e["spectrum"].is_array()) {
        throw Error(ErrorCode::InvalidConfig, "profile JSON: " + where + ".spectrum is not an array");
      }
      r.spectrum = e["spectrum"].get<std::vector<double>>();
    }
    if (!std::isfinite(r.intensity) || r.intensity < 0.0) {
      throw Error(ErrorCode::NonFiniteValue, "profile JSON: " + where + ".intensity");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string spectra_to_csv(std::span<const LayerReport> layers) {
  std::string out;
  char buf[64];
  for (const auto& l : layers) {
    out += std::to_string(l.index);
    std::snprintf(buf, sizeof(buf), ",%.17g", l.intensity);
    out += buf;
    for (double v : l.spectrum) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

ModelProfile to_profile(std::span<const LayerReport> layers) {
  ModelProfile p;
  for (const auto& l : layers) p.intensities.push_back(l.intensity);
  return p;
}

}  // namespace spectralkd
