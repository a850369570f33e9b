// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "spectralkd/error.hpp"

namespace {

using spectralkd::Error;
using spectralkd::ErrorCode;
namespace cli = spectralkd::cli;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage:
      return kExitUsage;
    case ErrorCode::NumericFailure:
    case ErrorCode::ZeroProfile:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-spectrum analysis and frequency-aligned distillation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Overrides data.seed for distill");

  cli::AnalyzeOptions analyze;
  std::string analyze_dir, tokens;
  auto* analyze_cmd = app.add_subcommand("analyze", "Per-layer channel spectra of layer_*.npy dumps");
  analyze_cmd->add_option("dir", analyze_dir, "Directory of layer_<k>.npy files")->required();
  analyze_cmd->add_option("--tokens", tokens, "Token grid HxW for rank-3 dumps");
  analyze_cmd->add_flag("--drop-class", analyze.drop_class, "Drop a leading class token");

  std::string hist_profile;
  std::size_t bins = 10;
  auto* hist_cmd = app.add_subcommand("histogram", "Histogram of layer intensities");
  hist_cmd->add_option("profile", hist_profile, "profile.json")->required();
  hist_cmd->add_option("--bins", bins, "Bin count")->capture_default_str()->check(CLI::PositiveNumber);

  std::string select_profile;
  std::size_t k = 8, student_depth = 0;
  auto* select_cmd = app.add_subcommand("select", "Top-k teacher layers and their student pairs");
  select_cmd->add_option("profile", select_profile, "Teacher profile.json")->required();
  select_cmd->add_option("--k", k, "Layers to select")->capture_default_str();
  select_cmd->add_option("--student-depth", student_depth, "Student depth")->required();

  std::string config_path;
  auto* distill_cmd = app.add_subcommand("distill", "Train teacher, baseline and distilled students");
  distill_cmd->add_option("config", config_path, "Run config JSON")->required();

  std::string compare_a, compare_b;
  auto* compare_cmd = app.add_subcommand("compare", "Distance between two normalized profiles");
  compare_cmd->add_option("a", compare_a, "First profile.json")->required();
  compare_cmd->add_option("b", compare_b, "Second profile.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const cli::fs::path out = out_dir.value_or(".");
  try {
    if (*analyze_cmd) {
      analyze.layer_dir = analyze_dir;
      if (!tokens.empty()) analyze.tokens = cli::parse_token_grid(tokens);
      analyze.out_dir = out;
      cli::cmd_analyze(analyze);
    } else if (*hist_cmd) {
      cli::cmd_histogram(hist_profile, bins, out);
    } else if (*select_cmd) {
      cli::cmd_select(select_profile, k, student_depth, out);
    } else if (*distill_cmd) {
      auto cfg = cli::load_run_config(config_path);
      if (out_dir) cfg.io.output_dir = *out_dir;
      if (seed) cfg.data.seed = *seed;
      const auto report = cli::cmd_distill(cfg);
      std::cerr << "distance(teacher, baseline)  = " << report.distance_baseline << '\n'
                << "distance(teacher, distilled) = " << report.distance_distilled << '\n';
    } else if (*compare_cmd) {
      const double d = cli::cmd_compare(compare_a, compare_b, out);
      std::printf("%.17g\n", d);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << spectralkd::to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
