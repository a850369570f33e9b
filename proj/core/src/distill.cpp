// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectralkd/error.hpp"
#include "spectralkd/fft.hpp"

namespace spectralkd {

void DistillConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidConfig, "distill.temperature must be > 0");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "distill.alpha must lie in [0, 1]");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidConfig, "distill.beta must be >= 0");
  }
}

namespace {

struct Window {
  std::size_t begin;
  std::size_t end;
};

Window pool_window(std::size_t i, std::size_t in, std::size_t out) {
  return {i * in / out, ((i + 1) * in + out - 1) / out};
}

void check_pool(std::size_t in, std::size_t out) {
  if (out == 0 || out > in) {
    throw Error(ErrorCode::InvalidArgument, "cannot pool " + std::to_string(in) +
                                                " channels onto " + std::to_string(out));
  }
}

}  // namespace

FeatureMap pool_channels(const FeatureMap& x, std::size_t out_channels) {
  const auto& d = x.dims();
  check_pool(d.channels, out_channels);
  if (out_channels == d.channels) return x;

  const FeatureDims od{d.batch, out_channels, d.height, d.width};
  const std::size_t hw = d.plane();
  std::vector<double> out(od.size(), 0.0);
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t i = 0; i < out_channels; ++i) {
      const auto win = pool_window(i, d.channels, out_channels);
      const double inv = 1.0 / static_cast<double>(win.end - win.begin);
      double* dst = out.data() + (b * out_channels + i) * hw;
      for (std::size_t c = win.begin; c < win.end; ++c) {
        const auto src = x.plane(b, c);
        for (std::size_t p = 0; p < hw; ++p) dst[p] += src[p];
      }
      for (std::size_t p = 0; p < hw; ++p) dst[p] *= inv;
    }
  }
  return FeatureMap(od, std::move(out));
}

FeatureMap pool_channels_adjoint(const FeatureMap& grad, std::size_t in_channels) {
  const auto& d = grad.dims();
  check_pool(in_channels, d.channels);
  if (in_channels == d.channels) return grad;

  const FeatureDims id{d.batch, in_channels, d.height, d.width};
  const std::size_t hw = d.plane();
  std::vector<double> out(id.size(), 0.0);
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t i = 0; i < d.channels; ++i) {
      const auto win = pool_window(i, in_channels, d.channels);
      const double inv = 1.0 / static_cast<double>(win.end - win.begin);
      const auto src = grad.plane(b, i);
      for (std::size_t c = win.begin; c < win.end; ++c) {
        double* dst = out.data() + (b * in_channels + c) * hw;
        for (std::size_t p = 0; p < hw; ++p) dst[p] += src[p] * inv;
      }
    }
  }
  return FeatureMap(id, std::move(out));
}

std::pair<FeatureMap, FeatureMap> align_channels(const FeatureMap& student,
                                                 const FeatureMap& teacher) {
  const auto& s = student.dims();
  const auto& t = teacher.dims();
  if (s.height != t.height || s.width != t.width) {
    throw Error(ErrorCode::SpatialMismatch,
                "student grid " + std::to_string(s.height) + "x" + std::to_string(s.width) +
                    " vs teacher grid " + std::to_string(t.height) + "x" + std::to_string(t.width));
  }
  if (s.batch != t.batch) {
    throw Error(ErrorCode::ShapeMismatch, "student and teacher batch sizes differ");
  }
  const std::size_t c = std::min(s.channels, t.channels);
  return {pool_channels(student, c), pool_channels(teacher, c)};
}

SpectrumStack spectrum_stack(const FeatureMap& x) {
  const auto& d = x.dims();
  SpectrumStack st;
  st.dims = d;
  st.kept_width = d.width / 2 + 1;
  const std::size_t plane_out = d.height * st.kept_width;
  const std::size_t half = st.half_size();
  st.data.assign(2 * half, 0.0);
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t c = 0; c < d.channels; ++c) {
      const auto f = rfft2(x.plane(b, c), d.height, d.width);
      const std::size_t base = (b * d.channels + c) * plane_out;
      std::copy(f.re.begin(), f.re.end(), st.data.begin() + static_cast<std::ptrdiff_t>(base));
      std::copy(f.im.begin(), f.im.end(),
                st.data.begin() + static_cast<std::ptrdiff_t>(half + base));
    }
  }
  return st;
}

FeatureLoss fft_loss(const FeatureMap& student, const FeatureMap& teacher) {
  auto [s, t] = align_channels(student, teacher);
  const auto& d = s.dims();
  const std::size_t kept = d.width / 2 + 1;
  const std::size_t plane_out = d.height * kept;
  const double count = 2.0 * static_cast<double>(d.batch * d.channels * plane_out);
  const double grad_scale = 2.0 / count;

  double sum = 0.0;
  std::vector<double> grad(d.size());
  ComplexTensor diff({d.height, kept});
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t c = 0; c < d.channels; ++c) {
      const auto fs = rfft2(s.plane(b, c), d.height, d.width);
      const auto ft = rfft2(t.plane(b, c), d.height, d.width);
      for (std::size_t k = 0; k < plane_out; ++k) {
        const double dr = fs.re[k] - ft.re[k];
        const double di = fs.im[k] - ft.im[k];
        sum += dr * dr + di * di;
        diff.re[k] = grad_scale * dr;
        diff.im[k] = grad_scale * di;
      }
      const auto g = rfft2_adjoint(diff, d.height, d.width);
      std::copy(g.begin(), g.end(),
                grad.begin() + static_cast<std::ptrdiff_t>((b * d.channels + c) * d.plane()));
    }
  }
  FeatureMap aligned_grad(d, std::move(grad));
  return {sum / count, pool_channels_adjoint(aligned_grad, student.dims().channels)};
}

namespace {

// Numerically stable log-softmax of one row of `scale * logits`.
void log_softmax(std::span<const double> row, double scale, std::vector<double>& out) {
  out.resize(row.size());
  double peak = -INFINITY;
  for (double v : row) peak = std::max(peak, v * scale);
  double total = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    out[k] = row[k] * scale - peak;
    total += std::exp(out[k]);
  }
  const double log_total = std::log(total);
  for (auto& v : out) v -= log_total;
}

void check_labels(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows) {
    throw Error(ErrorCode::ShapeMismatch, "label count does not match logit rows");
  }
  for (auto y : labels) {
    if (y >= logits.cols) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(y) + " with " + std::to_string(logits.cols) + " classes");
    }
  }
}

}  // namespace

LogitLoss cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  check_labels(logits, labels);
  const double inv_b = 1.0 / static_cast<double>(logits.rows);
  LogitLoss out{0.0, Matrix(logits.rows, logits.cols)};
  std::vector<double> lp;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    log_softmax(logits.row(b), 1.0, lp);
    out.value -= lp[labels[b]];
    for (std::size_t k = 0; k < logits.cols; ++k) {
      const double target = k == labels[b] ? 1.0 : 0.0;
      out.grad(b, k) = (std::exp(lp[k]) - target) * inv_b;
    }
  }
  out.value *= inv_b;
  return out;
}

KdLoss kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
               std::span<const std::size_t> labels, const DistillConfig& cfg) {
  cfg.validate();
  if (student_logits.rows != teacher_logits.rows || student_logits.cols != teacher_logits.cols) {
    throw Error(ErrorCode::ShapeMismatch, "student and teacher logits differ in shape");
  }
  if (student_logits.cols < 2) {
    throw Error(ErrorCode::ShapeMismatch, "distillation needs at least two classes");
  }
  auto ce = cross_entropy(student_logits, labels);

  const std::size_t rows = student_logits.rows;
  const std::size_t cols = student_logits.cols;
  const double inv_b = 1.0 / static_cast<double>(rows);
  const double inv_t = 1.0 / cfg.temperature;
  KdLoss out;
  out.l_ce = ce.value;
  out.grad = Matrix(rows, cols);
  std::vector<double> ls, lt;
  double kl = 0.0;
  for (std::size_t b = 0; b < rows; ++b) {
    log_softmax(student_logits.row(b), inv_t, ls);
    log_softmax(teacher_logits.row(b), inv_t, lt);
    for (std::size_t k = 0; k < cols; ++k) {
      const double pt = std::exp(lt[k]);
      if (pt > 0.0) kl += pt * (lt[k] - ls[k]);
      const double soft = (std::exp(ls[k]) - pt) * inv_b;
      out.grad(b, k) = (1.0 - cfg.alpha) * ce.grad(b, k) + cfg.alpha * cfg.temperature * soft;
    }
  }
  out.l_kl = kl * inv_b;
  out.l_kd = (1.0 - cfg.alpha) * out.l_ce +
             cfg.alpha * cfg.temperature * cfg.temperature * out.l_kl;
  return out;
}

TotalLoss total_loss(std::span<const FeatureMap> students, std::span<const FeatureMap> teachers,
                     const Matrix& student_logits, const Matrix& teacher_logits,
                     std::span<const std::size_t> labels, const DistillConfig& cfg) {
  if (students.size() != teachers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "student and teacher feature lists differ in length");
  }
  auto kd = kd_loss(student_logits, teacher_logits, labels, cfg);

  TotalLoss out;
  out.breakdown.l_ce = kd.l_ce;
  out.breakdown.l_kl = kd.l_kl;
  out.breakdown.l_kd = kd.l_kd;
  out.logit_grad = std::move(kd.grad);

  const std::size_t pairs = students.size();
  double fft_sum = 0.0;
  const double scale = pairs == 0 ? 0.0 : cfg.beta / static_cast<double>(pairs);
  out.feature_grads.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    auto f = fft_loss(students[i], teachers[i]);
    fft_sum += f.value;
    std::vector<double> g(f.grad.values().begin(), f.grad.values().end());
    for (auto& v : g) v *= scale;
    out.feature_grads.emplace_back(f.grad.dims(), std::move(g));
  }
  out.breakdown.l_fft = pairs == 0 ? 0.0 : fft_sum / static_cast<double>(pairs);
  out.breakdown.l_total = out.breakdown.l_kd + cfg.beta * out.breakdown.l_fft;
  return out;
}

}  // namespace spectralkd
