// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "spectralkd/model.hpp"

namespace spectralkd {

/// Writes one `<name>.npy` per tensor plus `manifest.json` mapping each
/// tensor name to its file and shape, with the model config echoed.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& dir);

/// Reads a directory written by `save_checkpoint`. Throws InvalidConfig on
/// a malformed manifest and ShapeMismatch when a tensor disagrees with it.
ModelParams load_checkpoint(const std::filesystem::path& dir);

}  // namespace spectralkd
