// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "spectralkd/distill.hpp"
#include "spectralkd/model.hpp"

namespace spectralkd::cli {

/// Everything `distill` needs. Missing keys keep these defaults; unknown
/// keys are rejected.
struct RunConfig {
  ModelConfig teacher = default_teacher_config();
  ModelConfig student = default_student_config();

  DistillConfig distill;  // T = 1, alpha = 0.9, beta = 0.2
  std::size_t top_k = 4;

  struct Data {
    std::uint64_t seed = 7;
    std::size_t count = 4096;
    std::size_t validation_count = 1024;
    std::size_t profile_count = 256;
    std::size_t epochs = 5;
    std::size_t batch = 64;
    double lr = 1e-3;
    double weight_decay = 0.05;
  } data;

  struct Io {
    std::string output_dir = "run";
    std::optional<std::string> teacher_checkpoint;
  } io;
};

/// Parses and validates a run config. Errors are InvalidConfig with the
/// offending key path (e.g. `model.student.depth`) in the message.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON form; parsing it yields an identical RunConfig.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace spectralkd::cli
