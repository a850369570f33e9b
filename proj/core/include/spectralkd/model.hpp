// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectralkd/dataset.hpp"
#include "spectralkd/tensor.hpp"

namespace spectralkd {

/// Shape of a pre-LN vision transformer without a class token. Tokens are
/// mean-pooled before the classifier.
struct ModelConfig {
  std::size_t image_size = 16;
  std::size_t patch_size = 4;
  std::size_t embed_dim = 16;
  std::size_t depth = 4;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  std::size_t class_count = 10;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig when the shape is inconsistent.
  void validate() const;

  [[nodiscard]] std::size_t grid() const noexcept { return image_size / patch_size; }
  [[nodiscard]] std::size_t tokens() const noexcept { return grid() * grid(); }
  [[nodiscard]] std::size_t patch_dim() const noexcept { return patch_size * patch_size; }
  [[nodiscard]] std::size_t hidden() const noexcept { return mlp_ratio * embed_dim; }

  bool operator==(const ModelConfig&) const = default;
};

/// Teacher and student defaults: depth 8 vs 4 keeps the 2:1 ratio of the
/// 24- and 12-layer pair this harness stands in for.
ModelConfig default_teacher_config();
ModelConfig default_student_config();

/// Weights of one transformer block. Matrices are (in, out), row-major.
struct BlockParams {
  std::vector<double> ln1_g, ln1_b;
  std::vector<double> qkv_w, qkv_b;
  std::vector<double> proj_w, proj_b;
  std::vector<double> ln2_g, ln2_b;
  std::vector<double> fc1_w, fc1_b;
  std::vector<double> fc2_w, fc2_b;

  bool operator==(const BlockParams&) const = default;
};

struct ModelParams {
  ModelConfig config;
  std::vector<double> patch_w, patch_b;
  std::vector<double> pos;
  std::vector<BlockParams> blocks;
  std::vector<double> norm_g, norm_b;
  std::vector<double> head_w, head_b;

  /// All tensors allocated for `config`, filled with zeros.
  static ModelParams zeros(const ModelConfig& config);

  /// Visits every tensor in a fixed order as (name, shape, values).
  template <class F>
  void for_each(F&& fn);
  template <class F>
  void for_each(F&& fn) const;

  [[nodiscard]] std::size_t parameter_count() const;

  bool operator==(const ModelParams&) const = default;
};

using ParamGrads = ModelParams;

/// Normal(0, 0.02) weights, zero biases, unit layer-norm gains, drawn from
/// SplitMix64(config.seed).
ModelParams init_params(const ModelConfig& config);

/// Everything the backward pass needs plus each block's output tokens.
struct ActivationCache {
  std::size_t batch = 0;
  std::size_t tokens = 0;
  std::size_t dim = 0;
  std::vector<double> patches;  // (B, N, patch_dim)

  struct Block {
    std::vector<double> input;      // (B, N, D)
    std::vector<double> xhat1, rstd1, a1;
    std::vector<double> qkv;        // (B, N, 3D)
    std::vector<double> probs;      // (B, heads, N, N)
    std::vector<double> ctx;        // (B, N, D)
    std::vector<double> mid;        // input + attention branch
    std::vector<double> xhat2, rstd2, a2;
    std::vector<double> hidden_pre;  // (B, N, hidden)
    std::vector<double> hidden_act;
    std::vector<double> output;     // mid + MLP branch
  };
  std::vector<Block> blocks;

  std::vector<double> xhat_f, rstd_f, a_f;
  std::vector<double> pooled;  // (B, D)

  /// Output tokens of block `layer` (1-based) as (B, N, D).
  [[nodiscard]] TokenMap layer_tokens(std::size_t layer) const;
};

struct ForwardResult {
  Matrix logits;  // (B, class_count)
  ActivationCache cache;
};

/// Forward pass over samples [first, first + count) of `data`.
ForwardResult forward(const ModelParams& params, const Dataset& data, std::size_t first,
                      std::size_t count);
ForwardResult forward(const ModelParams& params, const Dataset& data);

/// Gradient injected at the output of block `layer` (1-based), token layout.
struct FeatureGrad {
  std::size_t layer = 1;
  TokenMap grad;
};

/// Exact reverse-mode gradients for a loss whose partials w.r.t. the logits
/// and the selected block outputs are given.
ParamGrads backward(const ModelParams& params, const ActivationCache& cache,
                    const Matrix& logit_grad, std::span<const FeatureGrad> feature_grads);

/// Block output of `layer` as a (B, D, grid, grid) feature map.
FeatureMap layer_feature(const ModelParams& params, const ActivationCache& cache,
                         std::size_t layer);

/// Fraction of samples whose argmax logit equals the label.
double accuracy(const ModelParams& params, const Dataset& data, std::size_t batch = 256);

// ---------------------------------------------------------------------------

template <class F>
void ModelParams::for_each(F&& fn) {
  const auto& c = config;
  const std::size_t d = c.embed_dim;
  fn(std::string("patch_embed.weight"), std::vector<std::size_t>{c.patch_dim(), d}, patch_w);
  fn(std::string("patch_embed.bias"), std::vector<std::size_t>{d}, patch_b);
  fn(std::string("pos_embed"), std::vector<std::size_t>{c.tokens(), d}, pos);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    auto& b = blocks[l];
    const std::string p = "blocks." + std::to_string(l) + ".";
    fn(p + "norm1.weight", std::vector<std::size_t>{d}, b.ln1_g);
    fn(p + "norm1.bias", std::vector<std::size_t>{d}, b.ln1_b);
    fn(p + "attn.qkv.weight", std::vector<std::size_t>{d, 3 * d}, b.qkv_w);
    fn(p + "attn.qkv.bias", std::vector<std::size_t>{3 * d}, b.qkv_b);
    fn(p + "attn.proj.weight", std::vector<std::size_t>{d, d}, b.proj_w);
    fn(p + "attn.proj.bias", std::vector<std::size_t>{d}, b.proj_b);
    fn(p + "norm2.weight", std::vector<std::size_t>{d}, b.ln2_g);
    fn(p + "norm2.bias", std::vector<std::size_t>{d}, b.ln2_b);
    fn(p + "mlp.fc1.weight", std::vector<std::size_t>{d, c.hidden()}, b.fc1_w);
    fn(p + "mlp.fc1.bias", std::vector<std::size_t>{c.hidden()}, b.fc1_b);
    fn(p + "mlp.fc2.weight", std::vector<std::size_t>{c.hidden(), d}, b.fc2_w);
    fn(p + "mlp.fc2.bias", std::vector<std::size_t>{d}, b.fc2_b);
  }
  fn(std::string("norm.weight"), std::vector<std::size_t>{d}, norm_g);
  fn(std::string("norm.bias"), std::vector<std::size_t>{d}, norm_b);
  fn(std::string("head.weight"), std::vector<std::size_t>{d, c.class_count}, head_w);
  fn(std::string("head.bias"), std::vector<std::size_t>{c.class_count}, head_b);
}

template <class F>
void ModelParams::for_each(F&& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      [&](const std::string& name, const std::vector<std::size_t>& shape,
          std::vector<double>& values) { fn(name, shape, std::as_const(values)); });
}

}  // namespace spectralkd
