// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <functional>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "oracles.hpp"
#include "spectralkd/error.hpp"
#include "spectralkd/npy.hpp"
#include "spectralkd/tensor.hpp"
#include "temp_dir.hpp"

using namespace spectralkd;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Hand-built NPY v1.0 file: magic, version, u16 header length, dict padded
// with spaces so the preamble is a multiple of 64, then the raw payload.
void write_raw_npy(const std::filesystem::path& p, const std::string& dict,
                   const std::string& payload) {
  std::string header = dict;
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::string bytes = "\x93NUMPY";
  bytes.push_back('\x01');
  bytes.push_back('\x00');
  bytes.push_back(static_cast<char>(header.size() & 0xff));
  bytes.push_back(static_cast<char>(header.size() >> 8));
  bytes += header + payload;
  std::ofstream(p, std::ios::binary) << bytes;
}

template <typename T>
std::string le_bytes(const std::vector<T>& values) {
  static_assert(std::endian::native == std::endian::little);
  std::string out(values.size() * sizeof(T), '\0');
  std::memcpy(out.data(), values.data(), out.size());
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("feature map rejects zero extents and wrong lengths") {
    CHECK(code_of([] { FeatureMap({1, 0, 2, 2}, {}); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([] { FeatureMap({1, 1, 2, 2}, {1, 2, 3}); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([] { TokenMap({1, 2, 2}, {1, 2, 3}); }) == ErrorCode::ShapeMismatch);
    const FeatureMap m({1, 2, 1, 2}, {0, 1, 2, 3});
    CHECK(m.at(0, 1, 0, 0) == 2);
    CHECK(m.plane(0, 1)[1] == 3);
  }

  TEST_CASE("tokens land row-major on the grid") {
    const TokenMap t({1, 4, 1}, {10, 11, 12, 13});
    const auto m = tokens_to_spatial(t, 2, 2, false);
    CHECK(m.dims() == FeatureDims{1, 1, 2, 2});
    CHECK(m.at(0, 0, 0, 0) == 10);
    CHECK(m.at(0, 0, 0, 1) == 11);
    CHECK(m.at(0, 0, 1, 0) == 12);
    CHECK(m.at(0, 0, 1, 1) == 13);

    const TokenMap with_cls({1, 5, 1}, {99, 10, 11, 12, 13});
    CHECK(tokens_to_spatial(with_cls, 2, 2, true) == m);
    CHECK(code_of([&] { tokens_to_spatial(with_cls, 2, 2, false); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { tokens_to_spatial(t, 2, 2, true); }) == ErrorCode::ShapeMismatch);
  }

  TEST_CASE("channel moves to axis 1") {
    // (B=1, N=2, C=3): token 0 = [1,2,3], token 1 = [4,5,6]
    const TokenMap t({1, 2, 3}, {1, 2, 3, 4, 5, 6});
    const auto m = tokens_to_spatial(t, 1, 2, false);
    CHECK(m.dims() == FeatureDims{1, 3, 1, 2});
    CHECK(std::vector<double>(m.values().begin(), m.values().end()) ==
          std::vector<double>{1, 4, 2, 5, 3, 6});
  }

  TEST_CASE("dropping the class token then reshaping back recovers the patch tokens") {
    std::mt19937_64 gen(11);
    const auto data = oracle::uniform(gen, 2 * 17 * 8);
    const TokenMap t({2, 17, 8}, data);
    const auto spatial = tokens_to_spatial(t, 4, 4, true);
    const auto back = spatial_to_tokens(spatial);
    REQUIRE(back.dims() == TokenDims{2, 16, 8});
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t n = 0; n < 16; ++n)
        for (std::size_t c = 0; c < 8; ++c) CHECK(back.at(b, n, c) == t.at(b, n + 1, c));

    // per (batch, channel) the multiset of values survives
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t c = 0; c < 8; ++c) {
        std::vector<double> want, got;
        for (std::size_t n = 1; n < 17; ++n) want.push_back(t.at(b, n, c));
        for (double v : spatial.plane(b, c)) got.push_back(v);
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        CHECK(want == got);
      }
    }
  }

  TEST_CASE("all_finite") {
    const std::vector<double> ok{0.0, -1.0, 1e300};
    CHECK(all_finite(ok));
    const std::vector<double> bad{0.0, std::numeric_limits<double>::infinity()};
    CHECK_FALSE(all_finite(bad));
  }
}

TEST_SUITE("npy") {
  TEST_CASE("reads a hand-built float64 file") {
    testing::TempDir dir;
    write_raw_npy(dir / "a.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2, 2, 2), }",
                  le_bytes(std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7}));
    const auto loaded = load_npy(dir / "a.npy");
    REQUIRE(std::holds_alternative<FeatureMap>(loaded));
    const auto& m = std::get<FeatureMap>(loaded);
    CHECK(m.dims() == FeatureDims{1, 2, 2, 2});
    for (std::size_t i = 0; i < 8; ++i) CHECK(m.values()[i] == static_cast<double>(i));
  }

  TEST_CASE("float32 payloads are widened") {
    testing::TempDir dir;
    const std::vector<float> values{0.5f, -1.25f, 3.0f};
    write_raw_npy(dir / "f.npy", "{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }",
                  le_bytes(values));
    const auto a = read_npy(dir / "f.npy");
    CHECK(a.shape == std::vector<std::size_t>{3});
    CHECK(a.data == std::vector<double>{0.5, -1.25, 3.0});
  }

  TEST_CASE("rank 3 loads as tokens, other ranks are rejected") {
    testing::TempDir dir;
    write_raw_npy(dir / "t.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2, 1), }",
                  le_bytes(std::vector<double>{1, 2}));
    CHECK(std::holds_alternative<TokenMap>(load_npy(dir / "t.npy")));
    write_raw_npy(dir / "v.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (2,), }",
                  le_bytes(std::vector<double>{1, 2}));
    CHECK(code_of([&] { load_npy(dir / "v.npy"); }) == ErrorCode::ShapeMismatch);
  }

  TEST_CASE("malformed files map to distinct errors") {
    testing::TempDir dir;
    const auto payload = le_bytes(std::vector<double>{1, 2});
    write_raw_npy(dir / "be.npy", "{'descr': '>f8', 'fortran_order': False, 'shape': (2,), }", payload);
    CHECK(code_of([&] { read_npy(dir / "be.npy"); }) == ErrorCode::UnsupportedDtype);
    write_raw_npy(dir / "i8.npy", "{'descr': '<i8', 'fortran_order': False, 'shape': (2,), }", payload);
    CHECK(code_of([&] { read_npy(dir / "i8.npy"); }) == ErrorCode::UnsupportedDtype);
    write_raw_npy(dir / "f.npy", "{'descr': '<f8', 'fortran_order': True, 'shape': (2,), }", payload);
    CHECK(code_of([&] { read_npy(dir / "f.npy"); }) == ErrorCode::FortranOrderUnsupported);
    write_raw_npy(dir / "short.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }",
                  payload);
    CHECK(code_of([&] { read_npy(dir / "short.npy"); }) == ErrorCode::TruncatedPayload);
    write_raw_npy(dir / "nan.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (2,), }",
                  le_bytes(std::vector<double>{1, std::nan("")}));
    CHECK(code_of([&] { read_npy(dir / "nan.npy"); }) == ErrorCode::NonFiniteValue);
    std::ofstream(dir / "magic.npy", std::ios::binary) << "NOTNPY at all, just text";
    CHECK(code_of([&] { read_npy(dir / "magic.npy"); }) == ErrorCode::BadMagic);
    CHECK(code_of([&] { read_npy(dir / "missing.npy"); }) == ErrorCode::Io);
  }

  TEST_CASE("minimal tensor is a 128-byte header plus one value") {
    testing::TempDir dir;
    save_npy(FeatureMap({1, 1, 1, 1}, {0.0}), dir / "z.npy");
    const auto bytes = slurp(dir / "z.npy");
    REQUIRE(bytes.size() == 136);
    CHECK(bytes.substr(0, 8) == std::string("\x93NUMPY\x01\x00", 8));
    CHECK(bytes[127] == '\n');
    CHECK(bytes.substr(128) == std::string(8, '\0'));
  }

  TEST_CASE("header layout follows the v1.0 format") {
    const std::vector<std::size_t> shape{2, 3, 4, 4};
    const auto header = npy_header(shape);
    CHECK(header.size() % 64 == 0);
    CHECK(header.find("'shape': (2, 3, 4, 4)") != std::string::npos);
    CHECK(header.find("'descr': '<f8'") != std::string::npos);
    CHECK(header.back() == '\n');
    const std::size_t declared = static_cast<unsigned char>(header[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(header[9])) << 8);
    CHECK(declared + 10 == header.size());

    const std::vector<std::size_t> vec{5};
    CHECK(npy_header(vec).find("'shape': (5,)") != std::string::npos);
  }

  TEST_CASE("save then load is bitwise identical") {
    testing::TempDir dir;
    std::mt19937_64 gen(3);
    const FeatureMap m({3, 5, 4, 4}, oracle::uniform(gen, 3 * 5 * 4 * 4));
    save_npy(m, dir / "m.npy");
    const auto first = slurp(dir / "m.npy");
    const auto loaded = std::get<FeatureMap>(load_npy(dir / "m.npy"));
    CHECK(loaded == m);
    save_npy(loaded, dir / "m2.npy");
    CHECK(slurp(dir / "m2.npy") == first);
    CHECK(first.substr(first.size() - m.size() * 8) ==
          le_bytes(std::vector<double>(m.values().begin(), m.values().end())));
  }

  TEST_CASE("layer file names are 1-based and zero padded") {
    CHECK(layer_file_name(1) == "layer_001.npy");
    CHECK(layer_file_name(24) == "layer_024.npy");
    CHECK(layer_file_name(1000) == "layer_1000.npy");
  }
}
