// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "cli/svg.hpp"
#include "oracles.hpp"
#include "spectralkd/error.hpp"
#include "spectralkd/npy.hpp"
#include "temp_dir.hpp"

using namespace spectralkd;
using namespace spectralkd::cli;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

// Start/end tags must nest; good enough to catch broken markup.
bool tags_balanced(const std::string& xml) {
  static const std::regex tag(R"(<(/?)([A-Za-z][\w:-]*)[^>]*?(/?)>)");
  std::vector<std::string> stack;
  for (auto it = std::sregex_iterator(xml.begin(), xml.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3] == "/") continue;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    } else {
      stack.push_back(m[2]);
    }
  }
  return stack.empty();
}

std::vector<double> data_attr(const std::string& svg, const std::string& name) {
  const std::regex attr(name + "=\"([^\"]+)\"");
  std::vector<double> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), attr); it != std::sregex_iterator(); ++it)
    out.push_back(std::stod((*it)[1]));
  return out;
}

void check_svg(const std::string& svg) {
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("viewBox=\"0 0 800 400\"") != std::string::npos);
  CHECK(tags_balanced(svg));
}

void write_profile(const fs::path& path, const std::vector<double>& intensities) {
  std::vector<LayerReport> layers;
  for (std::size_t i = 0; i < intensities.size(); ++i) layers.push_back({i + 1, intensities[i], {}});
  write_text(path, profile_to_json(layers));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPECTRALKD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("token grid flag") {
    const auto g = parse_token_grid("14x7");
    CHECK(g.height == 14);
    CHECK(g.width == 7);
    for (const char* bad : {"14", "x7", "0x4", "4x", "4x4x4", "-2x3", ""})
      CHECK(code_of([&] { parse_token_grid(bad); }) == ErrorCode::Usage);
  }

  TEST_CASE("run config parsing") {
    const auto defaults = parse_run_config("{}");
    CHECK(defaults.distill.temperature == 1.0);
    CHECK(defaults.distill.alpha == 0.9);
    CHECK(defaults.distill.beta == 0.2);
    CHECK(defaults.teacher == default_teacher_config());
    CHECK(defaults.student == default_student_config());

    const auto text = run_config_to_json(defaults);
    CHECK(run_config_to_json(parse_run_config(text)) == text);

    CHECK(message_of([] { parse_run_config(R"({"model":{"student":{"depht":4}}})"); })
              .find("model.student.depht") != std::string::npos);
    CHECK(message_of([] { parse_run_config(R"({"data":{"epochs":"five"}})"); }).find("data.epochs") !=
          std::string::npos);
    CHECK(message_of([] { parse_run_config(R"({"distill":{"alpha":2}})"); }).find("distill") !=
          std::string::npos);
    CHECK(message_of([] { parse_run_config(R"({"extra":1})"); }).find("extra") != std::string::npos);
    CHECK(code_of([] { parse_run_config("{\"data\": "); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_run_config(R"({"distill":{"top_k":9}})"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { load_run_config("/nonexistent/config.json"); }) == ErrorCode::Io);
  }

  TEST_CASE("shipped config carries the published hyperparameters") {
    const auto cfg = load_run_config(SPECTRALKD_DEFAULT_CONFIG);
    CHECK(cfg.distill.temperature == 1.0);
    CHECK(cfg.distill.alpha == 0.9);
    CHECK(cfg.distill.beta == 0.2);
    CHECK(cfg.data.seed == 7);
  }

  TEST_CASE("analyze a directory with one constant layer") {
    testing::TempDir dir;
    fs::create_directories(dir / "layers");
    save_npy(FeatureMap({2, 4, 3, 3}, std::vector<double>(72, 1.25)), dir / "layers" / layer_file_name(1));
    const auto reports = cmd_analyze({dir / "layers", std::nullopt, false, dir / "out"});
    REQUIRE(reports.size() == 1);
    CHECK(std::abs(reports[0].intensity - 1.25) <= 1e-12);
    const auto parsed = profile_from_json(read_text(dir / "out" / "profile.json"));
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].intensity == reports[0].intensity);
    CHECK(fs::exists(dir / "out" / "spectra.csv"));
    check_svg(read_text(dir / "out" / "profile.svg"));
  }

  TEST_CASE("analyze matches the module profile on 24 seeded layers") {
    testing::TempDir dir;
    std::mt19937_64 gen(24);
    std::vector<FeatureMap> layers;
    for (std::size_t k = 1; k <= 24; ++k) {
      const FeatureDims d{2, 3 + k % 5, 2 + k % 2, 2};  // channels and height vary
      layers.emplace_back(d, oracle::uniform(gen, d.size()));
      save_npy(layers.back(), dir / layer_file_name(k));
    }
    const auto reports = cmd_analyze({dir.path(), std::nullopt, false, dir / "out"});
    const auto profile = model_profile(layers);
    REQUIRE(reports.size() == 24);
    for (std::size_t k = 0; k < 24; ++k) {
      CHECK(reports[k].index == k + 1);
      CHECK(reports[k].intensity == profile.intensities[k]);
    }
    // SVG points mirror the JSON values to 6 significant digits
    const auto ys = data_attr(read_text(dir / "out" / "profile.svg"), "data-y");
    REQUIRE(ys.size() == 24);
    for (std::size_t k = 0; k < 24; ++k) CHECK(std::abs(ys[k] - profile.intensities[k]) <= 5e-6 * profile.intensities[k]);

    // rerun overwrites with identical bytes
    const auto first = read_text(dir / "out" / "profile.json");
    cmd_analyze({dir.path(), std::nullopt, false, dir / "out"});
    CHECK(read_text(dir / "out" / "profile.json") == first);
  }

  TEST_CASE("analyze token dumps") {
    testing::TempDir dir;
    std::mt19937_64 gen(3);
    const TokenMap t({2, 5, 3}, oracle::uniform(gen, 30));
    save_npy(t, dir / layer_file_name(1));
    CHECK(code_of([&] { cmd_analyze({dir.path(), std::nullopt, false, dir / "out"}); }) ==
          ErrorCode::ShapeMismatch);
    const auto r = cmd_analyze({dir.path(), TokenGrid{2, 2}, true, dir / "out"});
    const auto want = channel_spectrum(tokens_to_spatial(t, 2, 2, true), 1);
    CHECK(r[0].spectrum == want.values);
  }

  TEST_CASE("analyze errors") {
    testing::TempDir dir;
    CHECK(code_of([&] { cmd_analyze({dir / "missing", std::nullopt, false, dir / "out"}); }) ==
          ErrorCode::NoLayersFound);
    CHECK(code_of([&] { cmd_analyze({dir.path(), std::nullopt, false, dir / "out"}); }) ==
          ErrorCode::NoLayersFound);
    std::ofstream(dir / "layer_002.npy") << "garbage";
    CHECK(message_of([&] { cmd_analyze({dir.path(), std::nullopt, false, dir / "out"}); }).find("layer_002.npy") !=
          std::string::npos);
  }

  TEST_CASE("histogram command") {
    testing::TempDir dir;
    write_profile(dir / "p.json", {0, 1, 2, 3});
    cmd_histogram(dir / "p.json", 2, dir.path());
    CHECK(read_text(dir / "histogram.csv") == "bin_lower,count\n0,2\n1.5,2\n");
    check_svg(read_text(dir / "histogram.svg"));

    write_profile(dir / "flat.json", {2, 2, 2});
    cmd_histogram(dir / "flat.json", 5, dir.path());
    CHECK(read_text(dir / "histogram.csv") == "bin_lower,count\n2,3\n");

    std::mt19937_64 gen(8);
    const auto v = oracle::uniform(gen, 24, 0, 3);
    write_profile(dir / "r.json", v);
    const auto h = cmd_histogram(dir / "r.json", 8, dir.path());
    ModelProfile p;
    p.intensities = v;
    const auto want = intensity_histogram(p, 8);
    REQUIRE(h.bins.size() == want.bins.size());
    for (std::size_t i = 0; i < 8; ++i) CHECK(h.bins[i].count == want.bins[i].count);
    const auto counts = data_attr(read_text(dir / "histogram.svg"), "data-count");
    REQUIRE(counts.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(counts[i] == static_cast<double>(want.bins[i].count));
  }

  TEST_CASE("select command") {
    testing::TempDir dir;
    write_profile(dir / "u.json", {9, 8, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 3, 4, 5, 6, 7, 9.5});
    const auto sel = cmd_select(dir / "u.json", 8, 12, dir.path());
    const auto doc = nlohmann::json::parse(read_text(dir / "selection.json"));
    CHECK(doc["teacher_layers"] == std::vector<int>{1, 2, 19, 20, 21, 22, 23, 24});
    CHECK(doc["student_layers"] == std::vector<int>{1, 2, 7, 8, 9, 10, 11, 12});
    CHECK(sel.student_layers.size() == 8);

    const auto one = cmd_select(dir / "u.json", 1, 12, dir.path());
    CHECK(one.teacher_layers == std::vector<std::size_t>{24});
    CHECK(one.student_layers == std::vector<std::size_t>{12});

    CHECK(code_of([&] { cmd_select(dir / "u.json", 25, 12, dir.path()); }) == ErrorCode::KOutOfRange);
    CHECK(code_of([&] { cmd_select(dir / "u.json", 8, 6, dir.path()); }) == ErrorCode::BudgetExceeded);
  }

  TEST_CASE("compare command") {
    testing::TempDir dir;
    write_profile(dir / "a.json", {0.2, 0.9, 0.4});
    write_profile(dir / "scaled.json", {2, 9, 4});
    write_profile(dir / "t.json", {1, 0, 1});
    write_profile(dir / "s.json", {1, 1});
    write_profile(dir / "zero.json", {0, 0});
    CHECK(cmd_compare(dir / "a.json", dir / "a.json", dir.path()) == 0.0);
    CHECK(cmd_compare(dir / "a.json", dir / "scaled.json", dir.path()) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cmd_compare(dir / "t.json", dir / "s.json", dir.path()) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    check_svg(read_text(dir / "compare.svg"));
    CHECK(code_of([&] { cmd_compare(dir / "zero.json", dir / "a.json", dir.path()); }) == ErrorCode::ZeroProfile);
  }

  TEST_CASE("distill with zero epochs writes initial checkpoints") {
    testing::TempDir dir;
    RunConfig cfg;
    cfg.teacher.embed_dim = 8;
    cfg.teacher.depth = 4;
    cfg.teacher.heads = 2;
    cfg.student.embed_dim = 4;
    cfg.student.depth = 2;
    cfg.student.heads = 2;
    cfg.top_k = 2;
    cfg.data.count = 32;
    cfg.data.validation_count = 16;
    cfg.data.profile_count = 8;
    cfg.data.epochs = 0;
    cfg.io.output_dir = (dir / "run").string();
    const auto report = cmd_distill(cfg);
    for (const char* f : {"losses.csv", "losses_baseline.csv", "losses_teacher.csv"})
      CHECK(read_text(dir / "run" / f) == "step,l_ce,l_kl,l_kd,l_fft,l_total\n");
    for (const char* sub : {"teacher", "baseline", "distilled"})
      CHECK(fs::exists(dir / "run" / sub / "manifest.json"));
    CHECK(read_text(dir / "run" / "baseline" / "head.weight.npy") ==
          read_text(dir / "run" / "distilled" / "head.weight.npy"));
    CHECK(report.fft_loss_final == report.fft_loss_initial);
    for (const char* svg : {"teacher_profile.svg", "baseline_profile.svg", "distilled_profile.svg"})
      check_svg(read_text(dir / "run" / svg));
    const auto dyn = nlohmann::json::parse(read_text(dir / "run" / "dynamics.json"));
    CHECK(dyn.contains("distance_distilled"));
  }

  TEST_CASE("binary exit codes") {
    testing::TempDir dir;
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("select") == 2);
    CHECK(run_cli("analyze " + (dir / "missing").string()) == 3);
    CHECK(run_cli("analyze " + dir.path().string() + " --tokens 3by3") == 2);
    write_profile(dir / "zero.json", {0, 0});
    write_profile(dir / "a.json", {1, 2});
    CHECK(run_cli("compare " + (dir / "zero.json").string() + " " + (dir / "a.json").string() +
                  " --out " + dir.path().string()) == 4);
    CHECK(run_cli("compare " + (dir / "a.json").string() + " " + (dir / "a.json").string() +
                  " --out " + dir.path().string()) == 0);
    std::ofstream(dir / "bad.json") << R"({"data": {"epoch": 1}})";
    CHECK(run_cli("distill " + (dir / "bad.json").string()) == 3);
  }
}
