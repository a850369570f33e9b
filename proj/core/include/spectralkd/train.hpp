// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spectralkd/dataset.hpp"
#include "spectralkd/distill.hpp"
#include "spectralkd/model.hpp"
#include "spectralkd/optim.hpp"
#include "spectralkd/spectral.hpp"

namespace spectralkd {

struct TrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  AdamWOptions optimizer;
  std::uint64_t shuffle_seed = 0;
};

/// Teacher/student layer pairs and the loss weights used to distill along them.
struct DistillPlan {
  LayerSelection layers;
  DistillConfig config;
};

struct TrainRun {
  AdamWState optimizer;
  std::vector<LossBreakdown> history;  // one entry per optimizer step
  std::uint64_t rng_state = 0;
  std::size_t epochs = 0;
};

struct TrainResult {
  ModelParams params;
  TrainRun run;
};

/// Minimizes batch cross-entropy. Batches are drawn from a fresh
/// Fisher-Yates permutation each epoch.
TrainResult train(const ModelParams& init, const Dataset& data, const TrainOptions& opts);

/// Minimizes kd_loss + beta * L_FFT against a frozen teacher, with feature
/// gradients injected at the student's planned layers.
TrainResult train(const ModelParams& init, const Dataset& data, const TrainOptions& opts,
                  const ModelParams& teacher, const DistillPlan& plan);

/// Mean fft_loss over the planned layer pairs on `data`.
double paired_fft_loss(const ModelParams& student, const ModelParams& teacher,
                       const LayerSelection& layers, const Dataset& data);

/// Spectral report of every block output on `data`.
std::vector<LayerReport> feature_report(const ModelParams& params, const Dataset& data);

}  // namespace spectralkd
