// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/optim.hpp"

#include <cmath>
#include <vector>

#include "spectralkd/error.hpp"

namespace spectralkd {

void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::uint64_t step, const AdamWOptions& opts) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "AdamW buffers differ in size");
  }
  const double t = static_cast<double>(step);
  const double bc1 = 1.0 - std::pow(opts.beta1, t);
  const double bc2 = 1.0 - std::pow(opts.beta2, t);
  const double decay = 1.0 - opts.lr * opts.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * grads[i];
    v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] = params[i] * decay - opts.lr * m_hat / (std::sqrt(v_hat) + opts.eps);
  }
}

AdamWState adamw_init(const ModelParams& params) {
  return {ModelParams::zeros(params.config), ModelParams::zeros(params.config), 0};
}

void adamw_step(ModelParams& params, const ParamGrads& grads, AdamWState& state,
                const AdamWOptions& opts) {
  state.step += 1;
  std::vector<std::span<double>> ps, ms, vs;
  std::vector<std::span<const double>> gs;
  params.for_each([&](const auto&, const auto&, std::vector<double>& x) { ps.emplace_back(x); });
  state.m.for_each([&](const auto&, const auto&, std::vector<double>& x) { ms.emplace_back(x); });
  state.v.for_each([&](const auto&, const auto&, std::vector<double>& x) { vs.emplace_back(x); });
  grads.for_each([&](const auto&, const auto&, const std::vector<double>& x) { gs.emplace_back(x); });
  if (gs.size() != ps.size() || ms.size() != ps.size() || vs.size() != ps.size()) {
    throw Error(ErrorCode::ShapeMismatch, "AdamW state does not match the parameters");
  }
  for (std::size_t i = 0; i < ps.size(); ++i) adamw_update(ps[i], gs[i], ms[i], vs[i], state.step, opts);
}

}  // namespace spectralkd
