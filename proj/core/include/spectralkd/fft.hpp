// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "spectralkd/tensor.hpp"

namespace spectralkd {

using Complex = std::complex<double>;

/// Complex tensor stored as separate real and imaginary planes of equal
/// shape, row-major.
struct ComplexTensor {
  std::vector<std::size_t> shape;
  std::vector<double> re;
  std::vector<double> im;

  ComplexTensor() = default;
  explicit ComplexTensor(std::vector<std::size_t> dims);

  [[nodiscard]] std::size_t size() const noexcept { return re.size(); }
};

// Sign conventions for every transform here: forward uses exp(-2*pi*i*jk/n)
// and is unnormalized; inverse uses exp(+2*pi*i*jk/n) and divides by n.

/// O(n^2) reference DFT.
std::vector<Complex> dft_naive(std::span<const Complex> v, bool inverse);

/// Fast transform of any length n >= 1: iterative radix-2 for powers of two,
/// Bluestein chirp-z otherwise.
std::vector<Complex> fft1d(std::span<const Complex> v, bool inverse);

/// One length-C transform per (b, h, w) fiber along the channel axis.
/// Output shape is (B, C, H, W).
ComplexTensor fft_channels(const FeatureMap& x);

/// 2-D transform of a real H x W plane keeping the W/2 + 1 non-negative
/// frequencies of the last axis. Output shape is (H, W/2 + 1).
ComplexTensor rfft2(std::span<const double> plane, std::size_t height, std::size_t width);

/// Transpose of the real-linear map x -> (Re, Im) of `rfft2`. `g` must have
/// shape (H, W/2 + 1); throws ShapeMismatch otherwise.
std::vector<double> rfft2_adjoint(const ComplexTensor& g, std::size_t height, std::size_t width);

}  // namespace spectralkd
