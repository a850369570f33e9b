// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spectralkd/error.hpp"
#include "spectralkd/fft.hpp"

using namespace spectralkd;

namespace {

std::vector<Complex> random_complex(std::mt19937_64& gen, std::size_t n) {
  const auto re = oracle::uniform(gen, n);
  const auto im = oracle::uniform(gen, n);
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {re[i], im[i]};
  return v;
}

double energy(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

}  // namespace

TEST_SUITE("fft") {
  TEST_CASE("naive DFT basics") {
    const std::vector<Complex> delta{1, 0, 0, 0};
    for (const auto& z : dft_naive(delta, false)) CHECK(z == Complex(1, 0));

    const std::vector<Complex> flat(4, Complex(2.5, 0));
    const auto f = dft_naive(flat, false);
    CHECK(std::abs(f[0] - Complex(10, 0)) < 1e-15);
    for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(f[k]) < 1e-15);

    std::mt19937_64 gen(7);
    const auto v = random_complex(gen, 7);
    const auto back = dft_naive(dft_naive(v, false), true);
    for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(back[i] - v[i]) < 1e-12);
  }

  TEST_CASE("length one is the identity") {
    const std::vector<Complex> v{Complex(-3.5, 2)};
    CHECK(fft1d(v, false) == v);
    CHECK(fft1d(v, true) == v);
  }

  TEST_CASE("pure tone lands in bins 1 and n-1") {
    const std::vector<Complex> tone{0, 1, 0, -1};
    const auto f = fft1d(tone, false);
    CHECK(std::abs(f[0]) < 1e-15);
    CHECK(std::abs(f[1] - Complex(0, -2)) < 1e-15);
    CHECK(std::abs(f[2]) < 1e-15);
    CHECK(std::abs(f[3] - Complex(0, 2)) < 1e-15);
  }

  TEST_CASE("fast transform agrees with the direct sum for n = 1..64") {
    std::mt19937_64 gen(2024);
    for (std::size_t n = 1; n <= 64; ++n) {
      CAPTURE(n);
      const auto v = random_complex(gen, n);
      for (bool inverse : {false, true}) {
        const auto fast = fft1d(v, inverse);
        const auto ref = oracle::dft(v, inverse);
        CHECK(oracle::rel_max_err(fast, ref) <= 1e-10);
      }
      // the library's own naive path against the extended-precision oracle
      CHECK(oracle::rel_max_err(dft_naive(v, false), oracle::dft(v, false)) <= 1e-12);
    }
  }

  TEST_CASE("inverse undoes forward, transform is linear, Parseval holds") {
    std::mt19937_64 gen(99);
    for (std::size_t n = 1; n <= 64; ++n) {
      CAPTURE(n);
      const auto u = random_complex(gen, n);
      const auto v = random_complex(gen, n);
      CHECK(oracle::rel_max_err(fft1d(fft1d(u, false), true), u) <= 1e-10);

      const Complex a(0.7, -1.3), b(-2.0, 0.25);
      std::vector<Complex> mix(n);
      for (std::size_t i = 0; i < n; ++i) mix[i] = a * u[i] + b * v[i];
      const auto fu = fft1d(u, false);
      const auto fv = fft1d(v, false);
      std::vector<Complex> want(n);
      for (std::size_t i = 0; i < n; ++i) want[i] = a * fu[i] + b * fv[i];
      CHECK(oracle::rel_max_err(fft1d(mix, false), want) <= 1e-10);

      const double lhs = energy(fu);
      const double rhs = static_cast<double>(n) * energy(u);
      CHECK(std::abs(lhs - rhs) <= 1e-9 * rhs);
    }
  }

  TEST_CASE("channel transform") {
    SUBCASE("constant over channels concentrates in bin 0") {
      const FeatureMap x({1, 4, 1, 1}, {1.5, 1.5, 1.5, 1.5});
      const auto f = fft_channels(x);
      CHECK(f.shape == std::vector<std::size_t>{1, 4, 1, 1});
      CHECK(f.re[0] == doctest::Approx(6.0).epsilon(1e-15));
      for (std::size_t k = 1; k < 4; ++k) {
        CHECK(std::abs(f.re[k]) < 1e-15);
        CHECK(std::abs(f.im[k]) < 1e-15);
      }
    }
    SUBCASE("single fiber reduces to fft1d") {
      const std::vector<double> data{1, -2, 0.5, 4, 3};
      const auto f = fft_channels(FeatureMap({1, 5, 1, 1}, data));
      std::vector<Complex> v(data.begin(), data.end());
      const auto want = fft1d(v, false);
      for (std::size_t k = 0; k < 5; ++k) {
        CHECK(f.re[k] == want[k].real());
        CHECK(f.im[k] == want[k].imag());
      }
    }
    SUBCASE("every fiber of a seeded map matches the oracle") {
      std::mt19937_64 gen(5);
      const FeatureDims d{2, 6, 3, 3};
      const FeatureMap x(d, oracle::uniform(gen, d.size()));
      const auto f = fft_channels(x);
      for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t h = 0; h < d.height; ++h) {
          for (std::size_t w = 0; w < d.width; ++w) {
            std::vector<Complex> fiber(d.channels), got(d.channels);
            for (std::size_t c = 0; c < d.channels; ++c) {
              fiber[c] = x.at(b, c, h, w);
              const auto o = x.offset(b, c, h, w);
              got[c] = {f.re[o], f.im[o]};
            }
            CHECK(oracle::rel_max_err(got, oracle::dft(fiber, false)) <= 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("rfft2 keeps the non-negative column frequencies of the full 2-D DFT") {
    {
      const std::vector<double> ones(4, 1.0);
      const auto f = rfft2(ones, 2, 2);
      CHECK(f.shape == std::vector<std::size_t>{2, 2});
      CHECK(f.re[0] == 4.0);
      for (std::size_t i = 1; i < 4; ++i) CHECK(std::abs(f.re[i]) + std::abs(f.im[i]) < 1e-15);
    }
    {
      const std::vector<double> one{-0.75};
      const auto f = rfft2(one, 1, 1);
      CHECK(f.re == std::vector<double>{-0.75});
      CHECK(f.im == std::vector<double>{0.0});
    }
    std::mt19937_64 gen(46);
    for (std::size_t h = 1; h <= 8; ++h) {
      for (std::size_t w = 1; w <= 8; ++w) {
        CAPTURE(h);
        CAPTURE(w);
        const auto x = oracle::uniform(gen, h * w);
        const auto f = rfft2(x, h, w);
        const std::size_t kept = w / 2 + 1;
        REQUIRE(f.shape == std::vector<std::size_t>{h, kept});
        const auto full = oracle::dft2(x, h, w);
        std::vector<Complex> got, want;
        for (std::size_t u = 0; u < h; ++u) {
          for (std::size_t v = 0; v < kept; ++v) {
            got.emplace_back(f.re[u * kept + v], f.im[u * kept + v]);
            want.push_back(full[u * w + v]);
          }
        }
        CHECK(oracle::rel_max_err(got, want) <= 1e-10);
      }
    }
  }

  TEST_CASE("rfft2_adjoint is the transpose of rfft2") {
    {
      const ComplexTensor zero({2, 2});
      CHECK(rfft2_adjoint(zero, 2, 2) == std::vector<double>(4, 0.0));
    }
    {
      ComplexTensor dc({2, 2});
      dc.re[0] = 1.0;
      const auto x = rfft2_adjoint(dc, 2, 2);
      for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(rfft2_adjoint(ComplexTensor({3, 2}), 3, 5), Error);

    std::mt19937_64 gen(8);
    auto inner_identity = [&](std::size_t h, std::size_t w) {
      const std::size_t kept = w / 2 + 1;
      const auto x = oracle::uniform(gen, h * w);
      ComplexTensor g({h, kept});
      g.re = oracle::uniform(gen, h * kept);
      g.im = oracle::uniform(gen, h * kept);
      const auto fx = rfft2(x, h, w);
      double lhs = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < fx.size(); ++i) {
        lhs += fx.re[i] * g.re[i] + fx.im[i] * g.im[i];
        scale += std::abs(fx.re[i] * g.re[i]) + std::abs(fx.im[i] * g.im[i]);
      }
      const auto at = rfft2_adjoint(g, h, w);
      double rhs = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * at[i];
      return std::abs(lhs - rhs) / std::max(scale, 1e-300);
    };
    for (int i = 0; i < 20; ++i) CHECK(inner_identity(3, 5) <= 1e-10);
    for (std::size_t h = 1; h <= 8; ++h)
      for (std::size_t w = 1; w <= 8; ++w) CHECK(inner_identity(h, w) <= 1e-10);
  }
}
