#pragma once

#include <span>
#include <utility>
#include <vector>

namespace semitrotter {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> points;
};

/// Ordinary least squares of log y on log x. Throws InvalidArgument for
/// non-positive coordinates or fewer than two distinct x values. A perfect
/// (or constant-y) fit reports r2 = 1.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points);

}  // namespace semitrotter
