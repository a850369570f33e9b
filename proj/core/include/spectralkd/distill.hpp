// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "spectralkd/tensor.hpp"

namespace spectralkd {

/// Soft-distillation hyperparameters. Defaults: T = 1, alpha = 0.9, beta = 0.2.
struct DistillConfig {
  double temperature = 1.0;
  double alpha = 0.9;
  double beta = 0.2;

  /// Throws InvalidConfig unless T > 0, 0 <= alpha <= 1 and beta >= 0.
  void validate() const;
};

/// Real and imaginary parts of the per-plane 2-D real FFT, stacked on a
/// leading axis: shape (2, B, C, H, W/2 + 1).
struct SpectrumStack {
  FeatureDims dims;  // of the source feature map
  std::size_t kept_width = 0;
  std::vector<double> data;

  [[nodiscard]] std::size_t half_size() const noexcept {
    return dims.batch * dims.channels * dims.height * kept_width;
  }
};

struct LossBreakdown {
  double l_ce = 0.0;
  double l_kl = 0.0;
  double l_kd = 0.0;
  double l_fft = 0.0;
  double l_total = 0.0;
};

/// Adaptive average pooling along the channel axis: output channel i is the
/// mean of input channels [floor(i*Cin/Cout), ceil((i+1)*Cin/Cout)).
FeatureMap pool_channels(const FeatureMap& x, std::size_t out_channels);

/// Transpose of `pool_channels`: spreads each output gradient evenly over its window.
FeatureMap pool_channels_adjoint(const FeatureMap& grad, std::size_t in_channels);

/// Pools whichever of the two maps has more channels down to the smaller
/// count. Throws SpatialMismatch when H or W differ and ShapeMismatch when B differs.
std::pair<FeatureMap, FeatureMap> align_channels(const FeatureMap& student,
                                                 const FeatureMap& teacher);

SpectrumStack spectrum_stack(const FeatureMap& x);

struct FeatureLoss {
  double value = 0.0;
  FeatureMap grad;  // w.r.t. the unaligned student map
};

/// Mean squared difference of the stacked spectra of the channel-aligned
/// maps, with its exact gradient w.r.t. the student. The teacher is constant.
FeatureLoss fft_loss(const FeatureMap& student, const FeatureMap& teacher);

struct LogitLoss {
  double value = 0.0;
  Matrix grad;
};

/// Batch-mean cross-entropy of softmax(logits) against integer labels.
LogitLoss cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

struct KdLoss {
  double l_ce = 0.0;
  double l_kl = 0.0;
  double l_kd = 0.0;
  Matrix grad;  // w.r.t. student logits
};

/// (1 - alpha) * CE + alpha * T^2 * KL(p_teacher || p_student), with both
/// distributions softened by T and both terms averaged over the batch.
KdLoss kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
               std::span<const std::size_t> labels, const DistillConfig& cfg);

struct TotalLoss {
  LossBreakdown breakdown;
  Matrix logit_grad;
  std::vector<FeatureMap> feature_grads;  // one per pair, already scaled by beta / pairs
};

/// kd_loss + beta * mean over pairs of fft_loss. `students[i]` pairs with `teachers[i]`.
TotalLoss total_loss(std::span<const FeatureMap> students, std::span<const FeatureMap> teachers,
                     const Matrix& student_logits, const Matrix& teacher_logits,
                     std::span<const std::size_t> labels, const DistillConfig& cfg);

}  // namespace spectralkd
