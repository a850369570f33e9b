// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace spectralkd::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart on a fixed 800x400 viewBox. Every data point is emitted as a
/// circle carrying its values (6 significant digits) in data-x / data-y.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

/// Bar chart on the same canvas; `lower[i]` is the left edge of bar i.
std::string bar_chart_svg(const std::string& title, const std::string& x_label,
                          const std::vector<double>& lower, double width,
                          const std::vector<double>& counts);

}  // namespace spectralkd::cli
