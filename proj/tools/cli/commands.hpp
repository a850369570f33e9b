// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cli/run_config.hpp"
#include "spectralkd/distill.hpp"
#include "spectralkd/spectral.hpp"

namespace spectralkd::cli {

namespace fs = std::filesystem;

/// Token grid used to reshape rank-3 dumps.
struct TokenGrid {
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Parses "HxW" (e.g. "14x14"). Throws Usage on malformed input.
TokenGrid parse_token_grid(const std::string& text);

struct AnalyzeOptions {
  fs::path layer_dir;
  std::optional<TokenGrid> tokens;
  bool drop_class = false;
  fs::path out_dir = ".";
};

/// Reads `layer_<k>.npy` dumps and writes profile.json, spectra.csv and
/// profile.svg. Returns the per-layer reports.
std::vector<LayerReport> cmd_analyze(const AnalyzeOptions& opts);

/// Writes histogram.csv (bin_lower,count) and histogram.svg.
Histogram cmd_histogram(const fs::path& profile_json, std::size_t bins, const fs::path& out_dir);

/// Writes selection.json with the top-k teacher layers and their student pairs.
LayerSelection cmd_select(const fs::path& profile_json, std::size_t k, std::size_t student_depth,
                          const fs::path& out_dir);

/// Writes compare.svg and returns the profile distance.
double cmd_compare(const fs::path& profile_a, const fs::path& profile_b, const fs::path& out_dir);

/// Summary of a distillation run, also written to dynamics.json.
struct DynamicsReport {
  std::uint64_t seed = 0;
  LayerSelection selection;
  double distance_baseline = 0.0;
  double distance_distilled = 0.0;
  double accuracy_teacher = 0.0;
  double accuracy_baseline = 0.0;
  double accuracy_distilled = 0.0;
  double fft_loss_initial = 0.0;
  double fft_loss_final = 0.0;
  double fft_loss_baseline_final = 0.0;
};

/// Trains (or loads) the teacher, trains a cross-entropy baseline student
/// and a distilled student from the same initialization, and writes
/// checkpoints, per-step loss CSVs, three profile reports and dynamics.json
/// under `cfg.io.output_dir`.
DynamicsReport cmd_distill(const RunConfig& cfg);

/// `step,l_ce,l_kl,l_kd,l_fft,l_total` followed by one row per step.
std::string losses_to_csv(const std::vector<LossBreakdown>& history);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace spectralkd::cli
