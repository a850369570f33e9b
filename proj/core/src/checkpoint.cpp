// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spectralkd/error.hpp"
#include "spectralkd/npy.hpp"

namespace spectralkd {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const ModelConfig& c) {
  ordered_json j;
  j["image_size"] = c.image_size;
  j["patch_size"] = c.patch_size;
  j["embed_dim"] = c.embed_dim;
  j["depth"] = c.depth;
  j["heads"] = c.heads;
  j["mlp_ratio"] = c.mlp_ratio;
  j["class_count"] = c.class_count;
  j["seed"] = c.seed;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.image_size = j.at("image_size").get<std::size_t>();
    c.patch_size = j.at("patch_size").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.depth = j.at("depth").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
    c.class_count = j.at("class_count").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("checkpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  ordered_json manifest;
  manifest["config"] = config_to_json(params.config);
  manifest["tensors"] = ordered_json::array();
  params.for_each([&](const std::string& name, const std::vector<std::size_t>& shape,
                      const std::vector<double>& values) {
    const std::string file = name + ".npy";
    write_npy(dir / file, shape, values);
    ordered_json entry;
    entry["name"] = name;
    entry["file"] = file;
    entry["shape"] = shape;
    manifest["tensors"].push_back(std::move(entry));
  });

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error(ErrorCode::Io, "no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("manifest.json: ") + e.what());
  }
  if (!manifest.contains("config") || !manifest.contains("tensors") ||
      !manifest["tensors"].is_array()) {
    throw Error(ErrorCode::InvalidConfig, "manifest.json needs 'config' and 'tensors'");
  }
  auto params = ModelParams::zeros(config_from_json(manifest["config"]));

  std::size_t index = 0;
  const auto& tensors = manifest["tensors"];
  params.for_each([&](const std::string& name, const std::vector<std::size_t>& shape,
                      std::vector<double>& values) {
    if (index >= tensors.size()) {
      throw Error(ErrorCode::InvalidConfig, "manifest.json lists too few tensors");
    }
    const auto& entry = tensors[index++];
    if (entry.value("name", std::string()) != name) {
      throw Error(ErrorCode::InvalidConfig, "manifest.json: expected tensor " + name);
    }
    auto arr = read_npy(dir / entry.at("file").get<std::string>());
    if (arr.shape != shape) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor " + name + " has the wrong shape");
    }
    values = std::move(arr.data);
  });
  if (index != tensors.size()) {
    throw Error(ErrorCode::InvalidConfig, "manifest.json lists unexpected tensors");
  }
  return params;
}

}  // namespace spectralkd
