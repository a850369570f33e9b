// SPDX-License-Identifier: Apache-2.0
#include "cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spectralkd/error.hpp"

namespace spectralkd::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, path + ": " + what);
}

const json& section(const json& parent, const char* key, const std::string& path) {
  const auto& j = parent.at(key);
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

void read_size(const json& obj, const char* key, const std::string& path, std::size_t& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj[key];
  if (!v.is_number_unsigned()) fail(path + "." + key, "expected a non-negative integer");
  out = v.get<std::size_t>();
}

void read_u64(const json& obj, const char* key, const std::string& path, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj[key];
  if (!v.is_number_unsigned()) fail(path + "." + key, "expected a non-negative integer");
  out = v.get<std::uint64_t>();
}

void read_real(const json& obj, const char* key, const std::string& path, double& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj[key];
  if (!v.is_number() || !std::isfinite(v.get<double>())) fail(path + "." + key, "expected a number");
  out = v.get<double>();
}

void read_model(const json& obj, const std::string& path, ModelConfig& m) {
  reject_unknown(obj, path, {"image_size", "patch_size", "embed_dim", "depth", "heads",
                             "mlp_ratio", "class_count"});
  read_size(obj, "image_size", path, m.image_size);
  read_size(obj, "patch_size", path, m.patch_size);
  read_size(obj, "embed_dim", path, m.embed_dim);
  read_size(obj, "depth", path, m.depth);
  read_size(obj, "heads", path, m.heads);
  read_size(obj, "mlp_ratio", path, m.mlp_ratio);
  read_size(obj, "class_count", path, m.class_count);
  try {
    m.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

nlohmann::ordered_json model_to_json(const ModelConfig& m) {
  return nlohmann::ordered_json{{"image_size", m.image_size}, {"patch_size", m.patch_size},
              {"embed_dim", m.embed_dim},   {"depth", m.depth},
              {"heads", m.heads},           {"mlp_ratio", m.mlp_ratio},
              {"class_count", m.class_count}};
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("<root>: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("<root>", "expected an object");
  reject_unknown(doc, "", {"model", "distill", "data", "io"});

  RunConfig cfg;
  if (doc.contains("model")) {
    const auto& model = section(doc, "model", "model");
    reject_unknown(model, "model", {"teacher", "student"});
    if (model.contains("teacher")) {
      read_model(section(model, "teacher", "model.teacher"), "model.teacher", cfg.teacher);
    }
    if (model.contains("student")) {
      read_model(section(model, "student", "model.student"), "model.student", cfg.student);
    }
  }
  if (doc.contains("distill")) {
    const auto& d = section(doc, "distill", "distill");
    reject_unknown(d, "distill", {"temperature", "alpha", "beta", "top_k"});
    read_real(d, "temperature", "distill", cfg.distill.temperature);
    read_real(d, "alpha", "distill", cfg.distill.alpha);
    read_real(d, "beta", "distill", cfg.distill.beta);
    read_size(d, "top_k", "distill", cfg.top_k);
  }
  if (doc.contains("data")) {
    const auto& d = section(doc, "data", "data");
    reject_unknown(d, "data", {"seed", "count", "validation_count", "profile_count", "epochs",
                               "batch", "lr", "weight_decay"});
    read_u64(d, "seed", "data", cfg.data.seed);
    read_size(d, "count", "data", cfg.data.count);
    read_size(d, "validation_count", "data", cfg.data.validation_count);
    read_size(d, "profile_count", "data", cfg.data.profile_count);
    read_size(d, "epochs", "data", cfg.data.epochs);
    read_size(d, "batch", "data", cfg.data.batch);
    read_real(d, "lr", "data", cfg.data.lr);
    read_real(d, "weight_decay", "data", cfg.data.weight_decay);
  }
  if (doc.contains("io")) {
    const auto& d = section(doc, "io", "io");
    reject_unknown(d, "io", {"output_dir", "teacher_checkpoint"});
    if (d.contains("output_dir")) {
      if (!d["output_dir"].is_string()) fail("io.output_dir", "expected a string");
      cfg.io.output_dir = d["output_dir"].get<std::string>();
    }
    if (d.contains("teacher_checkpoint") && !d["teacher_checkpoint"].is_null()) {
      if (!d["teacher_checkpoint"].is_string()) fail("io.teacher_checkpoint", "expected a string");
      cfg.io.teacher_checkpoint = d["teacher_checkpoint"].get<std::string>();
    }
  }

  try {
    cfg.distill.validate();
  } catch (const Error& e) {
    fail("distill", e.what());
  }
  if (cfg.top_k < 1 || cfg.top_k > cfg.teacher.depth) {
    fail("distill.top_k", "must lie in [1, model.teacher.depth]");
  }
  if (cfg.teacher.image_size != cfg.student.image_size ||
      cfg.teacher.patch_size != cfg.student.patch_size ||
      cfg.teacher.class_count != cfg.student.class_count) {
    fail("model", "teacher and student must share image_size, patch_size and class_count");
  }
  if (cfg.teacher.image_size != 16) fail("model.teacher.image_size", "synthetic images are 16x16");
  if (cfg.teacher.class_count != 10) fail("model.teacher.class_count", "synthetic data has 10 classes");
  if (cfg.data.count == 0) fail("data.count", "must be >= 1");
  if (cfg.data.validation_count == 0) fail("data.validation_count", "must be >= 1");
  if (cfg.data.profile_count == 0) fail("data.profile_count", "must be >= 1");
  if (cfg.data.batch == 0) fail("data.batch", "must be >= 1");
  if (!(cfg.data.lr > 0.0)) fail("data.lr", "must be > 0");
  if (cfg.data.weight_decay < 0.0) fail("data.weight_decay", "must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["model"]["teacher"] = model_to_json(cfg.teacher);
  doc["model"]["student"] = model_to_json(cfg.student);
  doc["distill"] = {{"temperature", cfg.distill.temperature},
                    {"alpha", cfg.distill.alpha},
                    {"beta", cfg.distill.beta},
                    {"top_k", cfg.top_k}};
  doc["data"] = {{"seed", cfg.data.seed},
                 {"count", cfg.data.count},
                 {"validation_count", cfg.data.validation_count},
                 {"profile_count", cfg.data.profile_count},
                 {"epochs", cfg.data.epochs},
                 {"batch", cfg.data.batch},
                 {"lr", cfg.data.lr},
                 {"weight_decay", cfg.data.weight_decay}};
  doc["io"]["output_dir"] = cfg.io.output_dir;
  doc["io"]["teacher_checkpoint"] =
      cfg.io.teacher_checkpoint ? nlohmann::ordered_json(*cfg.io.teacher_checkpoint) : nlohmann::ordered_json(nullptr);
  return doc.dump(2) + "\n";
}

}  // namespace spectralkd::cli
