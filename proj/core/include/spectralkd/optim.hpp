// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "spectralkd/model.hpp"

namespace spectralkd {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

/// First and second moments for every parameter tensor, plus the step count.
struct AdamWState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  bool operator==(const AdamWState&) const = default;
};

/// Decoupled weight decay followed by the bias-corrected Adam step. `step`
/// is the 1-based index of this update.
void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::uint64_t step, const AdamWOptions& opts);

AdamWState adamw_init(const ModelParams& params);

/// Applies one update to every tensor of `params` in place.
void adamw_step(ModelParams& params, const ParamGrads& grads, AdamWState& state,
                const AdamWOptions& opts);

}  // namespace spectralkd
