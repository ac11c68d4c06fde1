#pragma once

// Standalone SVG figures. Each figure embeds its plotted data in a comment
// block so it can be checked without rasterizing.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voe/estimators.hpp"

namespace voe {

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1 edges
  std::vector<std::size_t> counts;
};

/// Equal-width histogram. With bins == 0 the width follows the
/// Freedman-Diaconis rule 2 IQR n^(-1/3).
Histogram make_histogram(std::span<const double> values, int bins = 0);

std::string histogram_svg(const Histogram& h, const std::string& title, const std::string& x_label);

/// Line through (x, y) with an optional shaded band from the intervals.
std::string curve_svg(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<std::optional<Interval>>& band, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

}  // namespace voe
