// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "spectralkd/error.hpp"

namespace spectralkd {

namespace {

// exp(sign * 2*pi*i * num / den) with the angle reduced modulo den first.
Complex unit_root(std::size_t num, std::size_t den, double sign) {
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(num % den) /
                       static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

// Unnormalized in-place radix-2 transform; data.size() must be a power of two.
void radix2(std::vector<Complex>& data, double sign) {
  const std::size_t n = data.size();
  if (n < 2) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  std::vector<Complex> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) twiddle[k] = unit_root(k, n, sign);

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = twiddle[k * stride] * data[start + k + half];
        const Complex u = data[start + k];
        data[start + k] = u + t;
        data[start + k + half] = u - t;
      }
    }
  }
}

// Unnormalized transform of arbitrary length via chirp-z convolution.
std::vector<Complex> bluestein(std::span<const Complex> v, double sign) {
  const std::size_t n = v.size();
  const std::size_t m = std::bit_ceil(2 * n - 1);

  // chirp[k] = exp(sign * pi * i * k^2 / n); k^2 reduced mod 2n keeps the
  // angle small for large k.
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k2 = (k * k) % (2 * n);
    const double angle = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(angle), std::sin(angle)};
  }

  std::vector<Complex> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = v[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    b[m - k] = std::conj(chirp[k]);
  }

  radix2(a, -1.0);
  radix2(b, -1.0);
  for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
  radix2(a, +1.0);

  std::vector<Complex> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
  return out;
}

std::vector<Complex> transform(std::span<const Complex> v, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> out;
  if (std::has_single_bit(v.size())) {
    out.assign(v.begin(), v.end());
    radix2(out, sign);
  } else {
    out = bluestein(v, sign);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(v.size());
    for (auto& x : out) x *= scale;
  }
  return out;
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  re.assign(n, 0.0);
  im.assign(n, 0.0);
}

std::vector<Complex> dft_naive(std::span<const Complex> v, bool inverse) {
  const std::size_t n = v.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) acc += v[j] * unit_root(j * k, n, sign);
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

std::vector<Complex> fft1d(std::span<const Complex> v, bool inverse) {
  if (v.empty()) return {};
  return transform(v, inverse);
}

ComplexTensor fft_channels(const FeatureMap& x) {
  const auto& d = x.dims();
  ComplexTensor out({d.batch, d.channels, d.height, d.width});
  const std::size_t hw = d.plane();
  std::vector<Complex> fiber(d.channels);
  const auto src = x.values();
  for (std::size_t b = 0; b < d.batch; ++b) {
    const std::size_t base = b * d.channels * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      for (std::size_t c = 0; c < d.channels; ++c) fiber[c] = {src[base + c * hw + p], 0.0};
      const auto spec = transform(fiber, false);
      for (std::size_t c = 0; c < d.channels; ++c) {
        out.re[base + c * hw + p] = spec[c].real();
        out.im[base + c * hw + p] = spec[c].imag();
      }
    }
  }
  return out;
}

ComplexTensor rfft2(std::span<const double> plane, std::size_t height, std::size_t width) {
  if (plane.size() != height * width) {
    throw Error(ErrorCode::ShapeMismatch, "rfft2 plane size does not match H x W");
  }
  const std::size_t kept = width / 2 + 1;
  std::vector<Complex> rows(height * kept);
  std::vector<Complex> line(width);
  for (std::size_t h = 0; h < height; ++h) {
    for (std::size_t w = 0; w < width; ++w) line[w] = {plane[h * width + w], 0.0};
    const auto spec = transform(line, false);
    for (std::size_t k = 0; k < kept; ++k) rows[h * kept + k] = spec[k];
  }

  ComplexTensor out({height, kept});
  std::vector<Complex> column(height);
  for (std::size_t k = 0; k < kept; ++k) {
    for (std::size_t h = 0; h < height; ++h) column[h] = rows[h * kept + k];
    const auto spec = transform(column, false);
    for (std::size_t h = 0; h < height; ++h) {
      out.re[h * kept + k] = spec[h].real();
      out.im[h * kept + k] = spec[h].imag();
    }
  }
  return out;
}

std::vector<double> rfft2_adjoint(const ComplexTensor& g, std::size_t height, std::size_t width) {
  const std::size_t kept = width / 2 + 1;
  if (g.shape.size() != 2 || g.shape[0] != height || g.shape[1] != kept ||
      g.re.size() != height * kept || g.im.size() != height * kept) {
    throw Error(ErrorCode::ShapeMismatch, "rfft2_adjoint expects shape (" + std::to_string(height) +
                                              ", " + std::to_string(kept) + ")");
  }
  // The forward matrix is symmetric, so its real-linear transpose is the
  // real part of the conjugate (unnormalized inverse) transform applied to
  // g zero-filled over the discarded columns.
  std::vector<Complex> cols(height * kept);
  std::vector<Complex> column(height);
  for (std::size_t k = 0; k < kept; ++k) {
    for (std::size_t h = 0; h < height; ++h) column[h] = {g.re[h * kept + k], g.im[h * kept + k]};
    const auto back = transform(column, true);
    for (std::size_t h = 0; h < height; ++h) cols[h * kept + k] = back[h] * static_cast<double>(height);
  }

  std::vector<double> out(height * width);
  std::vector<Complex> line(width);
  for (std::size_t h = 0; h < height; ++h) {
    std::fill(line.begin(), line.end(), Complex{0.0, 0.0});
    for (std::size_t k = 0; k < kept; ++k) line[k] = cols[h * kept + k];
    const auto back = transform(line, true);
    for (std::size_t w = 0; w < width; ++w) {
      out[h * width + w] = back[w].real() * static_cast<double>(width);
    }
  }
  return out;
}

}  // namespace spectralkd
