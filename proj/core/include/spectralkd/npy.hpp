// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spectralkd/tensor.hpp"

namespace spectralkd {

/// Array of any rank as read from or written to an NPY file.
struct NdArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

/// Builds the complete NPY v1.0 header (magic, version, length, dict,
/// padding, newline) for a little-endian float64 C-order array. The total
/// length is a multiple of 64.
std::string npy_header(std::span<const std::size_t> shape);

/// Reads an NPY v1.0 file of dtype `<f4` or `<f8` (C order, any rank).
/// `<f4` payloads are widened to double. Non-finite values are rejected.
NdArray read_npy(const std::filesystem::path& path);

/// Writes `data` as NPY v1.0 `<f8`.
void write_npy(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const double> data);

using LayerTensor = std::variant<FeatureMap, TokenMap>;

/// Loads a layer dump: rank 4 -> FeatureMap, rank 3 -> TokenMap. Other
/// ranks raise ShapeMismatch.
LayerTensor load_npy(const std::filesystem::path& path);

void save_npy(const FeatureMap& tensor, const std::filesystem::path& path);
void save_npy(const TokenMap& tensor, const std::filesystem::path& path);

/// `layer_007.npy` for index 7. Indices are 1-based.
std::string layer_file_name(std::size_t index);

}  // namespace spectralkd
