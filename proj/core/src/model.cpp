// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spectralkd/error.hpp"
#include "spectralkd/rng.hpp"

namespace spectralkd {

namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kInitStd = 0.02;

// out[m, n] = in[m, :] . w[:, n] + bias[n]
void linear(const double* in, std::size_t rows, std::size_t in_dim, const double* w,
            const double* bias, std::size_t out_dim, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out + r * out_dim;
    std::copy(bias, bias + out_dim, o);
    const double* x = in + r * in_dim;
    for (std::size_t k = 0; k < in_dim; ++k) {
      const double xv = x[k];
      const double* wr = w + k * out_dim;
      for (std::size_t n = 0; n < out_dim; ++n) o[n] += xv * wr[n];
    }
  }
}

// Accumulates dw += in^T dout and db += colsum(dout); writes din = dout w^T
// when `din` is non-null.
void linear_backward(const double* in, const double* dout, std::size_t rows, std::size_t in_dim,
                     std::size_t out_dim, const double* w, double* dw, double* db, double* din) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = dout + r * out_dim;
    const double* x = in + r * in_dim;
    for (std::size_t n = 0; n < out_dim; ++n) db[n] += g[n];
    for (std::size_t k = 0; k < in_dim; ++k) {
      const double xv = x[k];
      double* dwr = dw + k * out_dim;
      for (std::size_t n = 0; n < out_dim; ++n) dwr[n] += xv * g[n];
    }
    if (din != nullptr) {
      double* dx = din + r * in_dim;
      for (std::size_t k = 0; k < in_dim; ++k) {
        const double* wr = w + k * out_dim;
        double acc = 0.0;
        for (std::size_t n = 0; n < out_dim; ++n) acc += g[n] * wr[n];
        dx[k] = acc;
      }
    }
  }
}

void layer_norm(const std::vector<double>& x, std::size_t rows, std::size_t dim,
                const std::vector<double>& gain, const std::vector<double>& bias,
                std::vector<double>& xhat, std::vector<double>& rstd, std::vector<double>& y) {
  xhat.resize(rows * dim);
  rstd.resize(rows);
  y.resize(rows * dim);
  const double inv_d = 1.0 / static_cast<double>(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * dim;
    double mean = 0.0;
    for (std::size_t k = 0; k < dim; ++k) mean += xr[k];
    mean *= inv_d;
    double var = 0.0;
    for (std::size_t k = 0; k < dim; ++k) var += (xr[k] - mean) * (xr[k] - mean);
    var *= inv_d;
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[r] = rs;
    for (std::size_t k = 0; k < dim; ++k) {
      const double h = (xr[k] - mean) * rs;
      xhat[r * dim + k] = h;
      y[r * dim + k] = gain[k] * h + bias[k];
    }
  }
}

// Accumulates the layer-norm input gradient into `dx`.
void layer_norm_backward(const std::vector<double>& dy, const std::vector<double>& xhat,
                         const std::vector<double>& rstd, std::size_t rows, std::size_t dim,
                         const std::vector<double>& gain, std::vector<double>& dgain,
                         std::vector<double>& dbias, std::vector<double>& dx) {
  const double inv_d = 1.0 / static_cast<double>(dim);
  std::vector<double> dxhat(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = dy.data() + r * dim;
    const double* h = xhat.data() + r * dim;
    double mean_dxhat = 0.0;
    double mean_dxhat_h = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      dgain[k] += g[k] * h[k];
      dbias[k] += g[k];
      dxhat[k] = g[k] * gain[k];
      mean_dxhat += dxhat[k];
      mean_dxhat_h += dxhat[k] * h[k];
    }
    mean_dxhat *= inv_d;
    mean_dxhat_h *= inv_d;
    for (std::size_t k = 0; k < dim; ++k) {
      dx[r * dim + k] += rstd[r] * (dxhat[k] - mean_dxhat - h[k] * mean_dxhat_h);
    }
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

void extract_patches(const ModelConfig& c, const Dataset& data, std::size_t first,
                     std::size_t count, std::vector<double>& out) {
  const std::size_t grid = c.grid();
  const std::size_t ps = c.patch_size;
  const std::size_t pd = c.patch_dim();
  out.resize(count * c.tokens() * pd);
  for (std::size_t b = 0; b < count; ++b) {
    const auto img = data.image(first + b);
    for (std::size_t gy = 0; gy < grid; ++gy) {
      for (std::size_t gx = 0; gx < grid; ++gx) {
        double* dst = out.data() + ((b * c.tokens()) + gy * grid + gx) * pd;
        for (std::size_t py = 0; py < ps; ++py) {
          for (std::size_t px = 0; px < ps; ++px) {
            dst[py * ps + px] = img[(gy * ps + py) * data.side + gx * ps + px];
          }
        }
      }
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
    fail("image_size must be a positive multiple of patch_size");
  }
  if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0) {
    fail("embed_dim must be a positive multiple of heads");
  }
  if (depth == 0) fail("depth must be >= 1");
  if (mlp_ratio == 0) fail("mlp_ratio must be >= 1");
  if (class_count < 2) fail("class_count must be >= 2");
}

ModelConfig default_teacher_config() {
  ModelConfig c;
  c.embed_dim = 32;
  c.depth = 8;
  c.heads = 4;
  return c;
}

ModelConfig default_student_config() {
  ModelConfig c;
  c.embed_dim = 16;
  c.depth = 4;
  c.heads = 2;
  return c;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.blocks.resize(config.depth);
  p.for_each([](const std::string&, const std::vector<std::size_t>& shape,
                std::vector<double>& values) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    values.assign(n, 0.0);
  });
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const auto&, const std::vector<double>& v) { n += v.size(); });
  return n;
}

ModelParams init_params(const ModelConfig& config) {
  auto p = ModelParams::zeros(config);
  SplitMix64 rng(config.seed);
  p.for_each([&](const std::string& name, const std::vector<std::size_t>& shape,
                 std::vector<double>& values) {
    const bool is_norm_gain = name.find("norm") != std::string::npos && name.ends_with(".weight");
    if (is_norm_gain) {
      std::fill(values.begin(), values.end(), 1.0);
    } else if (shape.size() == 2) {
      for (auto& v : values) v = kInitStd * rng.normal();
    }
  });
  return p;
}

TokenMap ActivationCache::layer_tokens(std::size_t layer) const {
  if (layer < 1 || layer > blocks.size()) {
    throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(layer) + " out of range");
  }
  return TokenMap(TokenDims{batch, tokens, dim}, blocks[layer - 1].output);
}

ForwardResult forward(const ModelParams& params, const Dataset& data) {
  return forward(params, data, 0, data.size());
}

ForwardResult forward(const ModelParams& params, const Dataset& data, std::size_t first,
                      std::size_t count) {
  const auto& c = params.config;
  if (data.side != c.image_size) {
    throw Error(ErrorCode::ShapeMismatch, "image side does not match model config");
  }
  if (count == 0 || first + count > data.size()) {
    throw Error(ErrorCode::ShapeMismatch, "batch range outside dataset");
  }
  const std::size_t B = count;
  const std::size_t N = c.tokens();
  const std::size_t D = c.embed_dim;
  const std::size_t H = c.heads;
  const std::size_t dh = D / H;
  const std::size_t M = c.hidden();
  const std::size_t rows = B * N;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardResult res;
  auto& cache = res.cache;
  cache.batch = B;
  cache.tokens = N;
  cache.dim = D;
  extract_patches(c, data, first, count, cache.patches);

  std::vector<double> x(rows * D);
  linear(cache.patches.data(), rows, c.patch_dim(), params.patch_w.data(), params.patch_b.data(),
         D, x.data());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < D; ++k) x[(b * N + n) * D + k] += params.pos[n * D + k];
    }
  }

  cache.blocks.resize(c.depth);
  std::vector<double> tmp(rows * D);
  for (std::size_t l = 0; l < c.depth; ++l) {
    const auto& bp = params.blocks[l];
    auto& bc = cache.blocks[l];
    bc.input = x;

    layer_norm(bc.input, rows, D, bp.ln1_g, bp.ln1_b, bc.xhat1, bc.rstd1, bc.a1);
    bc.qkv.resize(rows * 3 * D);
    linear(bc.a1.data(), rows, D, bp.qkv_w.data(), bp.qkv_b.data(), 3 * D, bc.qkv.data());

    bc.probs.assign(B * H * N * N, 0.0);
    bc.ctx.assign(rows * D, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const double* qkv = bc.qkv.data() + b * N * 3 * D;
      for (std::size_t h = 0; h < H; ++h) {
        double* P = bc.probs.data() + (b * H + h) * N * N;
        for (std::size_t i = 0; i < N; ++i) {
          const double* q = qkv + i * 3 * D + h * dh;
          double peak = -INFINITY;
          for (std::size_t j = 0; j < N; ++j) {
            const double* k = qkv + j * 3 * D + D + h * dh;
            double s = 0.0;
            for (std::size_t d = 0; d < dh; ++d) s += q[d] * k[d];
            P[i * N + j] = s * scale;
            peak = std::max(peak, P[i * N + j]);
          }
          double total = 0.0;
          for (std::size_t j = 0; j < N; ++j) {
            P[i * N + j] = std::exp(P[i * N + j] - peak);
            total += P[i * N + j];
          }
          for (std::size_t j = 0; j < N; ++j) P[i * N + j] /= total;
          double* out = bc.ctx.data() + (b * N + i) * D + h * dh;
          for (std::size_t j = 0; j < N; ++j) {
            const double* v = qkv + j * 3 * D + 2 * D + h * dh;
            const double p = P[i * N + j];
            for (std::size_t d = 0; d < dh; ++d) out[d] += p * v[d];
          }
        }
      }
    }

    linear(bc.ctx.data(), rows, D, bp.proj_w.data(), bp.proj_b.data(), D, tmp.data());
    bc.mid.resize(rows * D);
    for (std::size_t i = 0; i < rows * D; ++i) bc.mid[i] = bc.input[i] + tmp[i];

    layer_norm(bc.mid, rows, D, bp.ln2_g, bp.ln2_b, bc.xhat2, bc.rstd2, bc.a2);
    bc.hidden_pre.resize(rows * M);
    linear(bc.a2.data(), rows, D, bp.fc1_w.data(), bp.fc1_b.data(), M, bc.hidden_pre.data());
    bc.hidden_act.resize(rows * M);
    for (std::size_t i = 0; i < rows * M; ++i) bc.hidden_act[i] = gelu(bc.hidden_pre[i]);
    linear(bc.hidden_act.data(), rows, M, bp.fc2_w.data(), bp.fc2_b.data(), D, tmp.data());
    bc.output.resize(rows * D);
    for (std::size_t i = 0; i < rows * D; ++i) bc.output[i] = bc.mid[i] + tmp[i];
    x = bc.output;
  }

  layer_norm(x, rows, D, params.norm_g, params.norm_b, cache.xhat_f, cache.rstd_f, cache.a_f);
  cache.pooled.assign(B * D, 0.0);
  const double inv_n = 1.0 / static_cast<double>(N);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < D; ++k) cache.pooled[b * D + k] += cache.a_f[(b * N + n) * D + k];
    }
    for (std::size_t k = 0; k < D; ++k) cache.pooled[b * D + k] *= inv_n;
  }

  res.logits = Matrix(B, c.class_count);
  linear(cache.pooled.data(), B, D, params.head_w.data(), params.head_b.data(), c.class_count,
         res.logits.data.data());
  return res;
}

ParamGrads backward(const ModelParams& params, const ActivationCache& cache,
                    const Matrix& logit_grad, std::span<const FeatureGrad> feature_grads) {
  const auto& c = params.config;
  const std::size_t B = cache.batch;
  const std::size_t N = c.tokens();
  const std::size_t D = c.embed_dim;
  const std::size_t H = c.heads;
  const std::size_t dh = D / H;
  const std::size_t M = c.hidden();
  const std::size_t L = c.depth;
  const std::size_t rows = B * N;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  if (logit_grad.rows != B || logit_grad.cols != c.class_count) {
    throw Error(ErrorCode::ShapeMismatch, "logit gradient shape does not match the batch");
  }
  if (cache.blocks.size() != L) throw Error(ErrorCode::ShapeMismatch, "cache depth mismatch");
  for (const auto& fg : feature_grads) {
    if (fg.layer < 1 || fg.layer > L || !(fg.grad.dims() == TokenDims{B, N, D})) {
      throw Error(ErrorCode::ShapeMismatch,
                  "feature gradient for layer " + std::to_string(fg.layer) + " has wrong shape");
    }
  }
  auto inject = [&](std::size_t layer, std::vector<double>& dx) {
    for (const auto& fg : feature_grads) {
      if (fg.layer != layer) continue;
      const auto g = fg.grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    }
  };

  auto grads = ModelParams::zeros(c);

  // head and pooling
  std::vector<double> dpooled(B * D);
  linear_backward(cache.pooled.data(), logit_grad.data.data(), B, D, c.class_count,
                  params.head_w.data(), grads.head_w.data(), grads.head_b.data(), dpooled.data());
  std::vector<double> da(rows * D);
  const double inv_n = 1.0 / static_cast<double>(N);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < D; ++k) da[(b * N + n) * D + k] = dpooled[b * D + k] * inv_n;
    }
  }
  std::vector<double> dx(rows * D, 0.0);
  layer_norm_backward(da, cache.xhat_f, cache.rstd_f, rows, D, params.norm_g, grads.norm_g,
                      grads.norm_b, dx);
  inject(L, dx);

  std::vector<double> dh_act(rows * M), dctx(rows * D), dqkv(rows * 3 * D), dP(N);
  for (std::size_t l = L; l-- > 0;) {
    const auto& bp = params.blocks[l];
    const auto& bc = cache.blocks[l];
    auto& bg = grads.blocks[l];

    // MLP branch: output = mid + fc2(gelu(fc1(ln2(mid))))
    linear_backward(bc.hidden_act.data(), dx.data(), rows, M, D, bp.fc2_w.data(),
                    bg.fc2_w.data(), bg.fc2_b.data(), dh_act.data());
    for (std::size_t i = 0; i < rows * M; ++i) dh_act[i] *= gelu_grad(bc.hidden_pre[i]);
    linear_backward(bc.a2.data(), dh_act.data(), rows, D, M, bp.fc1_w.data(), bg.fc1_w.data(),
                    bg.fc1_b.data(), da.data());
    layer_norm_backward(da, bc.xhat2, bc.rstd2, rows, D, bp.ln2_g, bg.ln2_g, bg.ln2_b, dx);

    // attention branch: mid = input + proj(attn(ln1(input)))
    linear_backward(bc.ctx.data(), dx.data(), rows, D, D, bp.proj_w.data(), bg.proj_w.data(),
                    bg.proj_b.data(), dctx.data());
    std::fill(dqkv.begin(), dqkv.end(), 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const double* qkv = bc.qkv.data() + b * N * 3 * D;
      double* g = dqkv.data() + b * N * 3 * D;
      for (std::size_t h = 0; h < H; ++h) {
        const double* P = bc.probs.data() + (b * H + h) * N * N;
        for (std::size_t i = 0; i < N; ++i) {
          const double* go = dctx.data() + (b * N + i) * D + h * dh;
          double row_dot = 0.0;
          for (std::size_t j = 0; j < N; ++j) {
            const double* v = qkv + j * 3 * D + 2 * D + h * dh;
            double* gv = g + j * 3 * D + 2 * D + h * dh;
            const double p = P[i * N + j];
            double s = 0.0;
            for (std::size_t d = 0; d < dh; ++d) {
              s += go[d] * v[d];
              gv[d] += p * go[d];
            }
            dP[j] = s;
            row_dot += p * s;
          }
          const double* q = qkv + i * 3 * D + h * dh;
          double* gq = g + i * 3 * D + h * dh;
          for (std::size_t j = 0; j < N; ++j) {
            const double ds = P[i * N + j] * (dP[j] - row_dot) * scale;
            const double* k = qkv + j * 3 * D + D + h * dh;
            double* gk = g + j * 3 * D + D + h * dh;
            for (std::size_t d = 0; d < dh; ++d) {
              gq[d] += ds * k[d];
              gk[d] += ds * q[d];
            }
          }
        }
      }
    }
    linear_backward(bc.a1.data(), dqkv.data(), rows, D, 3 * D, bp.qkv_w.data(), bg.qkv_w.data(),
                    bg.qkv_b.data(), da.data());
    layer_norm_backward(da, bc.xhat1, bc.rstd1, rows, D, bp.ln1_g, bg.ln1_g, bg.ln1_b, dx);

    if (l > 0) inject(l, dx);
  }

  // embedding
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < D; ++k) grads.pos[n * D + k] += dx[(b * N + n) * D + k];
    }
  }
  linear_backward(cache.patches.data(), dx.data(), rows, c.patch_dim(), D, params.patch_w.data(),
                  grads.patch_w.data(), grads.patch_b.data(), nullptr);
  return grads;
}

FeatureMap layer_feature(const ModelParams& params, const ActivationCache& cache,
                         std::size_t layer) {
  const auto g = params.config.grid();
  return tokens_to_spatial(cache.layer_tokens(layer), g, g, false);
}

double accuracy(const ModelParams& params, const Dataset& data, std::size_t batch) {
  std::size_t correct = 0;
  for (std::size_t first = 0; first < data.size(); first += batch) {
    const std::size_t count = std::min(batch, data.size() - first);
    const auto res = forward(params, data, first, count);
    for (std::size_t b = 0; b < count; ++b) {
      const auto row = res.logits.row(b);
      const auto best = static_cast<std::size_t>(
          std::distance(row.begin(), std::max_element(row.begin(), row.end())));
      if (best == data.labels[first + b]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace spectralkd
