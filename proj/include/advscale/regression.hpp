#ifndef ADVSCALE_REGRESSION_HPP
#define ADVSCALE_REGRESSION_HPP

#include <cmath>
#include <span>

#include "advscale/error.hpp"

namespace advscale {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of y on x. R^2 is reported as 1 when the residual
/// sum of squares vanishes (including constant y).
inline LinearFit ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("regression inputs differ in length");
  if (x.size() < 2) throw UsageError("regression needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw SingularError("regressor is constant; slope is undefined");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  if (ss_res <= 1e-30 * std::max(1.0, syy) || syy == 0.0) {
    fit.r_squared = 1.0;
  } else {
    fit.r_squared = std::max(0.0, 1.0 - ss_res / syy);
  }
  return fit;
}

}  // namespace advscale

#endif  // ADVSCALE_REGRESSION_HPP
