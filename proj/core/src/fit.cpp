#include "semitrotter/fit.hpp"

#include <algorithm>
#include <cmath>

#include "semitrotter/errors.hpp"

namespace semitrotter {

SlopeFit fit_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw InvalidArgument("fit_slope: need at least two points");
  std::vector<double> lx, ly;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0 && y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
      throw InvalidArgument("fit_slope: coordinates must be positive and finite");
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_slope: x values are not distinct");

  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.points.assign(points.begin(), points.end());
  return fit;
}

}  // namespace semitrotter
