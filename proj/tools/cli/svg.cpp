// SPDX-License-Identifier: Apache-2.0
#include "cli/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace spectralkd::cli {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const {
    return kLeft + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * (kHeight - kTop - kBottom);
  }
};

std::string open_svg(const std::string& title) {
  std::string s =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"400\" "
      "viewBox=\"0 0 800 400\">\n"
      "<rect x=\"0\" y=\"0\" width=\"800\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">" + escape(title) + "</text>\n";
  return s;
}

std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label) {
  std::string s;
  const std::string bottom = fmt_px(kHeight - kBottom);
  s += "<line x1=\"" + fmt_px(kLeft) + "\" y1=\"" + bottom + "\" x2=\"" + fmt_px(kWidth - kRight) +
       "\" y2=\"" + bottom + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt_px(kLeft) + "\" y1=\"" + fmt_px(kTop) + "\" x2=\"" + fmt_px(kLeft) +
       "\" y2=\"" + bottom + "\" stroke=\"black\"/>\n";
  const auto tick = [&](double v, bool is_x) {
    if (is_x) {
      s += "<text x=\"" + fmt_px(f.px(v)) + "\" y=\"" + fmt_px(kHeight - kBottom + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt6(v) +
           "</text>\n";
    } else {
      s += "<text x=\"" + fmt_px(kLeft - 6) + "\" y=\"" + fmt_px(f.py(v) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt6(v) +
           "</text>\n";
    }
  };
  tick(f.x0, true);
  tick(f.x1, true);
  tick(f.y0, false);
  tick(f.y1, false);
  s += "<text x=\"400\" y=\"392\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"12\">" + escape(x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"200\" transform=\"rotate(-90 16 200)\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"12\">" + escape(y_label) + "</text>\n";
  return s;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
  Frame f{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), 0.0,
          std::numeric_limits<double>::lowest()};
  for (const auto& s : series) {
    for (double x : s.x) {
      f.x0 = std::min(f.x0, x);
      f.x1 = std::max(f.x1, x);
    }
    for (double y : s.y) {
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  }
  if (f.x0 > f.x1) f = {0.0, 1.0, 0.0, 1.0};

  std::string out = open_svg(title) + axes(f, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (k > 0) points += ' ';
      points += fmt_px(f.px(s.x[k])) + "," + fmt_px(f.py(s.y[k]));
    }
    out += "<g data-series=\"" + escape(s.label) + "\">\n";
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      out += "<circle cx=\"" + fmt_px(f.px(s.x[k])) + "\" cy=\"" + fmt_px(f.py(s.y[k])) +
             "\" r=\"3\" fill=\"" + color + "\" data-x=\"" + fmt6(s.x[k]) + "\" data-y=\"" +
             fmt6(s.y[k]) + "\"/>\n";
    }
    out += "</g>\n";
    out += "<text x=\"" + fmt_px(kWidth - kRight - 150) + "\" y=\"" +
           fmt_px(kTop + 14 * static_cast<double>(i)) + "\" fill=\"" + color +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart_svg(const std::string& title, const std::string& x_label,
                          const std::vector<double>& lower, double width,
                          const std::vector<double>& counts) {
  Frame f{0.0, 1.0, 0.0, 1.0};
  if (!lower.empty()) {
    f.x0 = lower.front();
    f.x1 = lower.back() + (width > 0.0 ? width : 1.0);
  }
  for (double c : counts) f.y1 = std::max(f.y1, c);

  std::string out = open_svg(title) + axes(f, x_label, "count");
  for (std::size_t i = 0; i < lower.size() && i < counts.size(); ++i) {
    const double left = f.px(lower[i]);
    const double right = f.px(lower[i] + (width > 0.0 ? width : 1.0));
    const double top = f.py(counts[i]);
    out += "<rect x=\"" + fmt_px(left) + "\" y=\"" + fmt_px(top) + "\" width=\"" +
           fmt_px(std::max(1.0, right - left - 1.0)) + "\" height=\"" +
           fmt_px(kHeight - kBottom - top) + "\" fill=\"#1f77b4\" data-lower=\"" + fmt6(lower[i]) +
           "\" data-count=\"" + fmt6(counts[i]) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace spectralkd::cli
