#ifndef ADVSCALE_BRENT_HPP
#define ADVSCALE_BRENT_HPP

#include <cmath>
#include <utility>

#include "advscale/error.hpp"

namespace advscale {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  // Set when the minimizer sits within tolerance of either end of the interval.
  bool at_boundary = false;
};

/// Brent's method (golden section with parabolic interpolation) for a
/// unimodal function on [lo, hi]. Terminates when the bracket half-width falls
/// below rel_tol * |x| + abs_tol.
template <typename F>
ScalarMinimum brent_minimize(F&& f, double lo, double hi, double rel_tol = 1e-8,
                             double abs_tol = 1e-12, int max_iterations = 500) {
  if (!(lo < hi)) throw UsageError("brent_minimize requires lo < hi");
  constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt 5) / 2

  double a = lo, b = hi;
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = f(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  ScalarMinimum out;
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (a + b);
    const double tol1 = rel_tol * std::abs(x) + abs_tol;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - mid) <= tol2 - 0.5 * (b - a)) {
      out.iterations = it;
      out.converged = true;
      break;
    }
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, mid - x);
        golden = false;
      }
    }
    if (golden) {
      e = (x >= mid) ? a - x : b - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d);
    const double fu = f(u);
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w, fv = fw;
      w = x, fw = fx;
      x = u, fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw;
        w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
    out.iterations = it + 1;
  }
  out.x = x;
  out.value = fx;
  const double edge_tol = 4.0 * (rel_tol * std::abs(x) + abs_tol);
  out.at_boundary = (x - lo) <= edge_tol || (hi - x) <= edge_tol;
  return out;
}

}  // namespace advscale

#endif  // ADVSCALE_BRENT_HPP
