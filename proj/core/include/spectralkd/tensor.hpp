// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spectralkd {

/// (batch, channel, height, width) extents of a feature map.
struct FeatureDims {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  [[nodiscard]] std::size_t size() const noexcept { return batch * channels * height * width; }
  [[nodiscard]] std::size_t plane() const noexcept { return height * width; }
  bool operator==(const FeatureDims&) const = default;
};

/// (batch, token, channel) extents of a transformer activation dump.
struct TokenDims {
  std::size_t batch = 1;
  std::size_t tokens = 1;
  std::size_t channels = 1;

  [[nodiscard]] std::size_t size() const noexcept { return batch * tokens * channels; }
  bool operator==(const TokenDims&) const = default;
};

/// Dense row-major B x C x H x W tensor. Immutable once built.
class FeatureMap {
 public:
  /// Throws ShapeMismatch if any extent is zero or `data.size() != dims.size()`.
  FeatureMap(FeatureDims dims, std::vector<double> data);

  static FeatureMap zeros(FeatureDims dims);

  [[nodiscard]] const FeatureDims& dims() const noexcept { return dims_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] std::size_t offset(std::size_t b, std::size_t c, std::size_t h,
                                   std::size_t w) const noexcept {
    return ((b * dims_.channels + c) * dims_.height + h) * dims_.width + w;
  }
  [[nodiscard]] double at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[offset(b, c, h, w)];
  }

  /// The H x W plane for (b, c).
  [[nodiscard]] std::span<const double> plane(std::size_t b, std::size_t c) const noexcept {
    return std::span<const double>(data_).subspan((b * dims_.channels + c) * dims_.plane(),
                                                  dims_.plane());
  }

  bool operator==(const FeatureMap&) const = default;

 private:
  FeatureDims dims_;
  std::vector<double> data_;
};

/// Dense row-major B x N x C tensor. Immutable once built.
class TokenMap {
 public:
  /// Throws ShapeMismatch if any extent is zero or `data.size() != dims.size()`.
  TokenMap(TokenDims dims, std::vector<double> data);

  [[nodiscard]] const TokenDims& dims() const noexcept { return dims_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] double at(std::size_t b, std::size_t n, std::size_t c) const noexcept {
    return data_[(b * dims_.tokens + n) * dims_.channels + c];
  }

  bool operator==(const TokenMap&) const = default;

 private:
  TokenDims dims_;
  std::vector<double> data_;
};

/// Row-major dense matrix, used for logits and their gradients.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
  bool operator==(const Matrix&) const = default;
};

/// Rearranges a token dump into a spatial map. Token n lands at
/// (n / W, n % W) and the channel axis moves to position 1. With
/// `drop_class` the first token is discarded and N must equal H*W + 1,
/// otherwise N must equal H*W.
FeatureMap tokens_to_spatial(const TokenMap& tokens, std::size_t height, std::size_t width,
                             bool drop_class);

/// Inverse of `tokens_to_spatial` without a class token.
TokenMap spatial_to_tokens(const FeatureMap& map);

/// Returns true if every entry is finite.
bool all_finite(std::span<const double> values) noexcept;

}  // namespace spectralkd
