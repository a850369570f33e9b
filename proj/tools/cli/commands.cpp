// SPDX-License-Identifier: Apache-2.0
#include "cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/svg.hpp"
#include "spectralkd/checkpoint.hpp"
#include "spectralkd/dataset.hpp"
#include "spectralkd/error.hpp"
#include "spectralkd/npy.hpp"
#include "spectralkd/rng.hpp"
#include "spectralkd/train.hpp"

namespace spectralkd::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

// Sub-stream ids for seeds derived from data.seed.
enum Stream : std::uint64_t {
  kTrainData = 1,
  kValidationData = 2,
  kTeacherInit = 3,
  kStudentInit = 4,
  kTeacherShuffle = 5,
  kStudentShuffle = 6,
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string profile_svg(const std::string& title, const std::vector<LayerReport>& layers) {
  Series s;
  s.label = "intensity";
  for (const auto& l : layers) {
    s.x.push_back(static_cast<double>(l.index));
    s.y.push_back(l.intensity);
  }
  return line_chart_svg(title, "layer", "intensity", {s});
}

std::vector<LayerReport> read_profile(const fs::path& path) {
  auto layers = profile_from_json(read_text(path));
  if (layers.empty()) throw Error(ErrorCode::InvalidConfig, path.string() + " has no layers");
  return layers;
}

void write_profile(const fs::path& dir, const std::string& stem, const std::string& title,
                   const std::vector<LayerReport>& layers) {
  write_text(dir / (stem + ".json"), profile_to_json(layers));
  write_text(dir / (stem + ".svg"), profile_svg(title, layers));
}

std::string selection_to_json(const LayerSelection& sel) {
  ordered_json doc;
  doc["teacher_layers"] = sel.teacher_layers;
  doc["student_layers"] = sel.student_layers;
  return doc.dump(2) + "\n";
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

TokenGrid parse_token_grid(const std::string& text) {
  static const std::regex pattern(R"(^([1-9][0-9]*)[xX]([1-9][0-9]*)$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) {
    throw Error(ErrorCode::Usage, "--tokens expects HxW, got '" + text + "'");
  }
  return {std::stoul(m[1].str()), std::stoul(m[2].str())};
}

std::vector<LayerReport> cmd_analyze(const AnalyzeOptions& opts) {
  static const std::regex layer_name(R"(^layer_([0-9]+)\.npy$)");
  std::vector<std::pair<std::size_t, fs::path>> files;
  std::error_code ec;
  if (fs::is_directory(opts.layer_dir, ec)) {
    for (const auto& entry : fs::directory_iterator(opts.layer_dir)) {
      std::smatch m;
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && std::regex_match(name, m, layer_name)) {
        files.emplace_back(std::stoul(m[1].str()), entry.path());
      }
    }
  }
  if (files.empty()) {
    throw Error(ErrorCode::NoLayersFound, "no layer_*.npy files in " + opts.layer_dir.string());
  }
  std::sort(files.begin(), files.end());

  std::vector<LayerReport> reports;
  for (const auto& [index, path] : files) {
    const auto name = path.filename().string();
    try {
      auto loaded = load_npy(path);
      FeatureMap map = std::holds_alternative<FeatureMap>(loaded)
                           ? std::get<FeatureMap>(std::move(loaded))
                           : [&]() {
                               if (!opts.tokens) {
                                 throw Error(ErrorCode::ShapeMismatch,
                                             "rank-3 token dump needs --tokens HxW");
                               }
                               return tokens_to_spatial(std::get<TokenMap>(loaded),
                                                        opts.tokens->height, opts.tokens->width,
                                                        opts.drop_class);
                             }();
      const auto& d = map.dims();
      std::cerr << name << ": B=" << d.batch << " C=" << d.channels << " H=" << d.height
                << " W=" << d.width << '\n';
      auto spectrum = channel_spectrum(map, index);
      const double intensity = layer_intensity(spectrum);
      reports.push_back({index, intensity, std::move(spectrum.values)});
    } catch (const Error& e) {
      throw Error(e.code(), name + ": " + e.what());
    }
  }

  ensure_dir(opts.out_dir);
  write_text(opts.out_dir / "profile.json", profile_to_json(reports));
  write_text(opts.out_dir / "spectra.csv", spectra_to_csv(reports));
  write_text(opts.out_dir / "profile.svg", profile_svg("Model-wise frequency intensity", reports));
  return reports;
}

Histogram cmd_histogram(const fs::path& profile_json, std::size_t bins, const fs::path& out_dir) {
  const auto layers = read_profile(profile_json);
  const auto hist = intensity_histogram(to_profile(layers), bins);

  std::string csv = "bin_lower,count\n";
  std::vector<double> lower, counts;
  for (const auto& b : hist.bins) {
    csv += fmt17(b.lower) + "," + std::to_string(b.count) + "\n";
    lower.push_back(b.lower);
    counts.push_back(static_cast<double>(b.count));
  }
  ensure_dir(out_dir);
  write_text(out_dir / "histogram.csv", csv);
  write_text(out_dir / "histogram.svg",
             bar_chart_svg("Layer intensity histogram", "intensity", lower, hist.width, counts));
  return hist;
}

LayerSelection cmd_select(const fs::path& profile_json, std::size_t k, std::size_t student_depth,
                          const fs::path& out_dir) {
  const auto profile = to_profile(read_profile(profile_json));
  const auto teacher = select_layers_topk(profile, k);
  auto sel = map_student_layers(teacher, profile.layer_count(), student_depth);
  ensure_dir(out_dir);
  write_text(out_dir / "selection.json", selection_to_json(sel));
  return sel;
}

double cmd_compare(const fs::path& profile_a, const fs::path& profile_b, const fs::path& out_dir) {
  const auto a = to_profile(read_profile(profile_a));
  const auto b = to_profile(read_profile(profile_b));
  const double distance = profile_distance(a, b);

  auto normalized_series = [](const ModelProfile& p, const std::string& label) {
    Series s;
    s.label = label;
    const double peak = *std::max_element(p.intensities.begin(), p.intensities.end());
    const std::size_t n = p.layer_count();
    for (std::size_t i = 0; i < n; ++i) {
      // depth fraction so profiles of different length overlay
      s.x.push_back(n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1));
      s.y.push_back(p.intensities[i] / peak);
    }
    return s;
  };
  ensure_dir(out_dir);
  write_text(out_dir / "compare.svg",
             line_chart_svg("Normalized profiles (distance " + fmt17(distance) + ")",
                            "relative depth", "intensity / max",
                            {normalized_series(a, profile_a.filename().string()),
                             normalized_series(b, profile_b.filename().string())}));
  return distance;
}

std::string losses_to_csv(const std::vector<LossBreakdown>& history) {
  std::string csv = "step,l_ce,l_kl,l_kd,l_fft,l_total\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    csv += std::to_string(i) + "," + fmt17(h.l_ce) + "," + fmt17(h.l_kl) + "," + fmt17(h.l_kd) +
           "," + fmt17(h.l_fft) + "," + fmt17(h.l_total) + "\n";
  }
  return csv;
}

DynamicsReport cmd_distill(const RunConfig& cfg) {
  const fs::path out = cfg.io.output_dir;
  ensure_dir(out);
  write_text(out / "config.json", run_config_to_json(cfg));

  const auto seed = cfg.data.seed;
  const auto train_data = synth_dataset(derive_seed(seed, kTrainData), cfg.data.count);
  const auto validation = synth_dataset(derive_seed(seed, kValidationData), cfg.data.validation_count);
  const auto probe = slice(validation, 0, std::min(cfg.data.profile_count, validation.size()));

  TrainOptions opts;
  opts.epochs = cfg.data.epochs;
  opts.batch_size = cfg.data.batch;
  opts.optimizer.lr = cfg.data.lr;
  opts.optimizer.weight_decay = cfg.data.weight_decay;

  // teacher
  ModelParams teacher;
  if (cfg.io.teacher_checkpoint) {
    std::cerr << "loading teacher from " << *cfg.io.teacher_checkpoint << '\n';
    teacher = load_checkpoint(*cfg.io.teacher_checkpoint);
    if (!(teacher.config.embed_dim == cfg.teacher.embed_dim &&
          teacher.config.depth == cfg.teacher.depth && teacher.config.heads == cfg.teacher.heads)) {
      throw Error(ErrorCode::InvalidConfig, "teacher checkpoint does not match model.teacher");
    }
    write_text(out / "losses_teacher.csv", losses_to_csv({}));
  } else {
    auto tcfg = cfg.teacher;
    tcfg.seed = derive_seed(seed, kTeacherInit);
    opts.shuffle_seed = derive_seed(seed, kTeacherShuffle);
    std::cerr << "training teacher (" << cfg.data.epochs << " epochs)\n";
    auto trained = train(init_params(tcfg), train_data, opts);
    teacher = std::move(trained.params);
    write_text(out / "losses_teacher.csv", losses_to_csv(trained.run.history));
  }
  save_checkpoint(teacher, out / "teacher");

  DynamicsReport report;
  report.seed = seed;
  const auto teacher_report = feature_report(teacher, probe);
  write_profile(out, "teacher_profile", "Teacher", teacher_report);
  const auto teacher_profile = to_profile(teacher_report);
  report.selection = map_student_layers(select_layers_topk(teacher_profile, cfg.top_k),
                                        cfg.teacher.depth, cfg.student.depth);
  write_text(out / "selection.json", selection_to_json(report.selection));

  auto scfg = cfg.student;
  scfg.seed = derive_seed(seed, kStudentInit);
  const auto student_init = init_params(scfg);
  opts.shuffle_seed = derive_seed(seed, kStudentShuffle);
  report.fft_loss_initial = paired_fft_loss(student_init, teacher, report.selection, probe);

  // baseline: same pairs are evaluated for logging, but alpha = beta = 0
  // leaves plain cross-entropy as the objective.
  DistillPlan baseline_plan{report.selection, cfg.distill};
  baseline_plan.config.alpha = 0.0;
  baseline_plan.config.beta = 0.0;
  std::cerr << "training baseline student\n";
  auto baseline = train(student_init, train_data, opts, teacher, baseline_plan);
  write_text(out / "losses_baseline.csv", losses_to_csv(baseline.run.history));
  save_checkpoint(baseline.params, out / "baseline");

  std::cerr << "training distilled student\n";
  const DistillPlan plan{report.selection, cfg.distill};
  auto distilled = train(student_init, train_data, opts, teacher, plan);
  write_text(out / "losses.csv", losses_to_csv(distilled.run.history));
  save_checkpoint(distilled.params, out / "distilled");

  const auto baseline_report = feature_report(baseline.params, probe);
  const auto distilled_report = feature_report(distilled.params, probe);
  write_profile(out, "baseline_profile", "Baseline student", baseline_report);
  write_profile(out, "distilled_profile", "Distilled student", distilled_report);

  report.distance_baseline = profile_distance(teacher_profile, to_profile(baseline_report));
  report.distance_distilled = profile_distance(teacher_profile, to_profile(distilled_report));
  report.accuracy_teacher = accuracy(teacher, validation);
  report.accuracy_baseline = accuracy(baseline.params, validation);
  report.accuracy_distilled = accuracy(distilled.params, validation);
  report.fft_loss_final = paired_fft_loss(distilled.params, teacher, report.selection, probe);
  report.fft_loss_baseline_final = paired_fft_loss(baseline.params, teacher, report.selection, probe);

  ordered_json doc;
  doc["seed"] = report.seed;
  doc["teacher_layers"] = report.selection.teacher_layers;
  doc["student_layers"] = report.selection.student_layers;
  doc["distance_baseline"] = report.distance_baseline;
  doc["distance_distilled"] = report.distance_distilled;
  doc["accuracy_teacher"] = report.accuracy_teacher;
  doc["accuracy_baseline"] = report.accuracy_baseline;
  doc["accuracy_distilled"] = report.accuracy_distilled;
  doc["fft_loss_initial"] = report.fft_loss_initial;
  doc["fft_loss_final"] = report.fft_loss_final;
  doc["fft_loss_baseline_final"] = report.fft_loss_baseline_final;
  write_text(out / "dynamics.json", doc.dump(2) + "\n");
  return report;
}

}  // namespace spectralkd::cli
