// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/npy.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "spectralkd/error.hpp"

namespace spectralkd {

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are read by memcpy; big-endian hosts are not supported");

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreamble = 10;  // magic(6) + version(2) + header_len(2)

std::string shape_repr(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  s += ")";
  return s;
}

// Returns the text following `'key':` with leading spaces removed.
std::string_view dict_value(std::string_view dict, std::string_view key) {
  const std::string needle = "'" + std::string(key) + "'";
  const auto pos = dict.find(needle);
  if (pos == std::string_view::npos) {
    throw Error(ErrorCode::BadMagic, "NPY header lacks key " + needle);
  }
  auto rest = dict.substr(pos + needle.size());
  std::size_t i = 0;
  while (i < rest.size() && (rest[i] == ' ' || rest[i] == ':')) ++i;
  return rest.substr(i);
}

std::vector<std::size_t> parse_shape(std::string_view text) {
  if (text.empty() || text.front() != '(') {
    throw Error(ErrorCode::BadMagic, "malformed shape tuple in NPY header");
  }
  const auto close = text.find(')');
  if (close == std::string_view::npos) {
    throw Error(ErrorCode::BadMagic, "unterminated shape tuple in NPY header");
  }
  std::vector<std::size_t> shape;
  std::size_t value = 0;
  bool in_number = false;
  for (char ch : text.substr(1, close - 1)) {
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      value = value * 10 + static_cast<std::size_t>(ch - '0');
      in_number = true;
    } else if (ch == ',') {
      if (in_number) shape.push_back(value);
      value = 0;
      in_number = false;
    } else if (ch != ' ' && ch != 'L') {
      throw Error(ErrorCode::BadMagic, "unexpected character in NPY shape");
    }
  }
  if (in_number) shape.push_back(value);
  return shape;
}

}  // namespace

std::string npy_header(std::span<const std::size_t> shape) {
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_repr(shape) + ", }";
  const std::size_t unpadded = kPreamble + dict.size() + 1;
  const std::size_t total = (unpadded + 63) / 64 * 64;
  dict.append(total - unpadded, ' ');
  dict.push_back('\n');

  const auto header_len = static_cast<std::uint16_t>(dict.size());
  std::string out(kMagic);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header_len & 0xFF));
  out.push_back(static_cast<char>(header_len >> 8));
  out += dict;
  return out;
}

NdArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < kPreamble || std::string_view(bytes).substr(0, 6) != kMagic) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an NPY file");
  }
  if (bytes[6] != '\x01' || bytes[7] != '\x00') {
    throw Error(ErrorCode::BadMagic, path.string() + ": only NPY version 1.0 is supported");
  }
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kPreamble + header_len) {
    throw Error(ErrorCode::TruncatedPayload, path.string() + ": header truncated");
  }
  const std::string_view dict = std::string_view(bytes).substr(kPreamble, header_len);

  const auto descr = dict_value(dict, "descr");
  std::size_t elem = 0;
  if (descr.starts_with("'<f8'")) {
    elem = 8;
  } else if (descr.starts_with("'<f4'")) {
    elem = 4;
  } else {
    const auto end = descr.find(',');
    throw Error(ErrorCode::UnsupportedDtype,
                path.string() + ": dtype " + std::string(descr.substr(0, end)));
  }
  if (dict_value(dict, "fortran_order").starts_with("True")) {
    throw Error(ErrorCode::FortranOrderUnsupported, path.string());
  }

  NdArray out;
  out.shape = parse_shape(dict_value(dict, "shape"));
  std::size_t count = 1;
  for (auto d : out.shape) count *= d;

  const std::size_t payload = bytes.size() - kPreamble - header_len;
  if (payload < count * elem) {
    throw Error(ErrorCode::TruncatedPayload, path.string() + ": expected " +
                                                 std::to_string(count * elem) + " payload bytes, found " +
                                                 std::to_string(payload));
  }
  const char* src = bytes.data() + kPreamble + header_len;
  out.data.resize(count);
  if (elem == 8) {
    std::memcpy(out.data.data(), src, count * 8);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, src + i * 4, 4);
      out.data[i] = static_cast<double>(f);
    }
  }
  if (!all_finite(out.data)) {
    throw Error(ErrorCode::NonFiniteValue, path.string() + " contains NaN or Inf");
  }
  return out;
}

void write_npy(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const double> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  const auto header = npy_header(shape);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

LayerTensor load_npy(const std::filesystem::path& path) {
  auto arr = read_npy(path);
  const auto& s = arr.shape;
  if (s.size() == 4) {
    return FeatureMap(FeatureDims{s[0], s[1], s[2], s[3]}, std::move(arr.data));
  }
  if (s.size() == 3) {
    return TokenMap(TokenDims{s[0], s[1], s[2]}, std::move(arr.data));
  }
  throw Error(ErrorCode::ShapeMismatch,
              path.string() + ": expected rank 3 or 4, got rank " + std::to_string(s.size()));
}

void save_npy(const FeatureMap& tensor, const std::filesystem::path& path) {
  const auto& d = tensor.dims();
  const std::size_t shape[] = {d.batch, d.channels, d.height, d.width};
  write_npy(path, shape, tensor.values());
}

void save_npy(const TokenMap& tensor, const std::filesystem::path& path) {
  const auto& d = tensor.dims();
  const std::size_t shape[] = {d.batch, d.tokens, d.channels};
  write_npy(path, shape, tensor.values());
}

std::string layer_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "layer_%03zu.npy", index);
  return buf;
}

}  // namespace spectralkd
