// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectralkd/error.hpp"

namespace spectralkd {

FeatureMap::FeatureMap(FeatureDims dims, std::vector<double> data)
    : dims_(dims), data_(std::move(data)) {
  if (dims_.batch == 0 || dims_.channels == 0 || dims_.height == 0 || dims_.width == 0) {
    throw Error(ErrorCode::ShapeMismatch, "feature map extents must be >= 1");
  }
  if (data_.size() != dims_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature map holds " + std::to_string(data_.size()) +
                                              " values, dims need " +
                                              std::to_string(dims_.size()));
  }
}

FeatureMap FeatureMap::zeros(FeatureDims dims) {
  return FeatureMap(dims, std::vector<double>(dims.size(), 0.0));
}

TokenMap::TokenMap(TokenDims dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
  if (dims_.batch == 0 || dims_.tokens == 0 || dims_.channels == 0) {
    throw Error(ErrorCode::ShapeMismatch, "token map extents must be >= 1");
  }
  if (data_.size() != dims_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "token map holds " + std::to_string(data_.size()) +
                                              " values, dims need " +
                                              std::to_string(dims_.size()));
  }
}

FeatureMap tokens_to_spatial(const TokenMap& tokens, std::size_t height, std::size_t width,
                             bool drop_class) {
  const auto& td = tokens.dims();
  const std::size_t skip = drop_class ? 1 : 0;
  if (height == 0 || width == 0 || td.tokens != height * width + skip) {
    throw Error(ErrorCode::ShapeMismatch,
                "token count " + std::to_string(td.tokens) + " does not match grid " +
                    std::to_string(height) + "x" + std::to_string(width) +
                    (drop_class ? " plus a class token" : ""));
  }
  const FeatureDims fd{td.batch, td.channels, height, width};
  std::vector<double> out(fd.size());
  const std::size_t hw = height * width;
  for (std::size_t b = 0; b < td.batch; ++b) {
    for (std::size_t n = 0; n < hw; ++n) {
      for (std::size_t c = 0; c < td.channels; ++c) {
        out[(b * td.channels + c) * hw + n] = tokens.at(b, n + skip, c);
      }
    }
  }
  return FeatureMap(fd, std::move(out));
}

TokenMap spatial_to_tokens(const FeatureMap& map) {
  const auto& fd = map.dims();
  const std::size_t hw = fd.plane();
  const TokenDims td{fd.batch, hw, fd.channels};
  std::vector<double> out(td.size());
  const auto src = map.values();
  for (std::size_t b = 0; b < fd.batch; ++b) {
    for (std::size_t c = 0; c < fd.channels; ++c) {
      for (std::size_t n = 0; n < hw; ++n) {
        out[(b * hw + n) * fd.channels + c] = src[(b * fd.channels + c) * hw + n];
      }
    }
  }
  return TokenMap(td, std::move(out));
}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace spectralkd
