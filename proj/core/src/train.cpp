// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spectralkd/error.hpp"
#include "spectralkd/rng.hpp"

namespace spectralkd {

namespace {

Dataset gather(const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t px = data.side * data.side;
  Dataset out;
  out.side = data.side;
  out.pixels.resize(indices.size() * px);
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto img = data.image(indices[i]);
    std::copy(img.begin(), img.end(), out.pixels.begin() + static_cast<std::ptrdiff_t>(i * px));
    out.labels[i] = data.labels[indices[i]];
  }
  return out;
}

void check_plan(const ModelParams& student, const ModelParams& teacher, const DistillPlan& plan) {
  plan.config.validate();
  const auto& sel = plan.layers;
  if (sel.teacher_layers.size() != sel.student_layers.size()) {
    throw Error(ErrorCode::InvalidConfig, "distill plan pairs differ in count");
  }
  for (auto t : sel.teacher_layers) {
    if (t < 1 || t > teacher.config.depth) {
      throw Error(ErrorCode::InvalidConfig, "teacher layer " + std::to_string(t) + " out of range");
    }
  }
  for (auto s : sel.student_layers) {
    if (s < 1 || s > student.config.depth) {
      throw Error(ErrorCode::InvalidConfig, "student layer " + std::to_string(s) + " out of range");
    }
  }
  if (teacher.config.class_count != student.config.class_count ||
      teacher.config.image_size != student.config.image_size) {
    throw Error(ErrorCode::InvalidConfig, "teacher and student disagree on images or classes");
  }
  if (teacher.config.grid() != student.config.grid()) {
    throw Error(ErrorCode::SpatialMismatch, "teacher and student token grids differ");
  }
}

TrainResult run_training(const ModelParams& init, const Dataset& data, const TrainOptions& opts,
                         const ModelParams* teacher, const DistillPlan* plan) {
  if (opts.batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  if (plan != nullptr) check_plan(init, *teacher, *plan);

  TrainResult res{init, {adamw_init(init), {}, opts.shuffle_seed, 0}};
  auto& params = res.params;
  SplitMix64 rng(opts.shuffle_seed);
  std::vector<std::size_t> order(data.size());

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t first = 0; first < order.size(); first += opts.batch_size) {
      const std::size_t count = std::min(opts.batch_size, order.size() - first);
      const auto batch = gather(data, std::span(order).subspan(first, count));
      const auto student = forward(params, batch);

      LossBreakdown loss;
      ParamGrads grads;
      if (plan == nullptr) {
        const auto ce = cross_entropy(student.logits, batch.labels);
        loss = {ce.value, 0.0, ce.value, 0.0, ce.value};
        grads = backward(params, student.cache, ce.grad, {});
      } else {
        const auto tfwd = forward(*teacher, batch);
        std::vector<FeatureMap> s_feats, t_feats;
        for (std::size_t p = 0; p < plan->layers.student_layers.size(); ++p) {
          s_feats.push_back(layer_feature(params, student.cache, plan->layers.student_layers[p]));
          t_feats.push_back(layer_feature(*teacher, tfwd.cache, plan->layers.teacher_layers[p]));
        }
        auto total = total_loss(s_feats, t_feats, student.logits, tfwd.logits, batch.labels,
                                plan->config);
        loss = total.breakdown;
        std::vector<FeatureGrad> fgrads;
        for (std::size_t p = 0; p < total.feature_grads.size(); ++p) {
          fgrads.push_back({plan->layers.student_layers[p], spatial_to_tokens(total.feature_grads[p])});
        }
        grads = backward(params, student.cache, total.logit_grad, fgrads);
      }
      if (!std::isfinite(loss.l_total)) {
        throw Error(ErrorCode::NumericFailure,
                    "non-finite loss at step " + std::to_string(res.run.history.size()));
      }
      adamw_step(params, grads, res.run.optimizer, opts.optimizer);
      res.run.history.push_back(loss);
    }
    res.run.epochs = epoch + 1;
  }
  res.run.rng_state = rng.state();
  return res;
}

}  // namespace

TrainResult train(const ModelParams& init, const Dataset& data, const TrainOptions& opts) {
  return run_training(init, data, opts, nullptr, nullptr);
}

TrainResult train(const ModelParams& init, const Dataset& data, const TrainOptions& opts,
                  const ModelParams& teacher, const DistillPlan& plan) {
  return run_training(init, data, opts, &teacher, &plan);
}

double paired_fft_loss(const ModelParams& student, const ModelParams& teacher,
                       const LayerSelection& layers, const Dataset& data) {
  if (layers.student_layers.empty()) return 0.0;
  constexpr std::size_t kChunk = 128;
  double total = 0.0;
  for (std::size_t first = 0; first < data.size(); first += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - first);
    const auto s = forward(student, data, first, count);
    const auto t = forward(teacher, data, first, count);
    double chunk = 0.0;
    for (std::size_t p = 0; p < layers.student_layers.size(); ++p) {
      chunk += fft_loss(layer_feature(student, s.cache, layers.student_layers[p]),
                        layer_feature(teacher, t.cache, layers.teacher_layers[p]))
                   .value;
    }
    total += chunk * static_cast<double>(count);
  }
  return total / static_cast<double>(data.size() * layers.student_layers.size());
}

std::vector<LayerReport> feature_report(const ModelParams& params, const Dataset& data) {
  const auto fwd = forward(params, data);
  std::vector<FeatureMap> layers;
  for (std::size_t l = 1; l <= params.config.depth; ++l) {
    layers.push_back(layer_feature(params, fwd.cache, l));
  }
  return analyze_layers(layers);
}

}  // namespace spectralkd
