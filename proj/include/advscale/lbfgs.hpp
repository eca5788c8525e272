#ifndef ADVSCALE_LBFGS_HPP
#define ADVSCALE_LBFGS_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string_view>
#include <vector>

namespace advscale {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  int max_line_search = 40;
};

enum class LbfgsStatus {
  Converged,         // gradient norm <= tolerance
  Stalled,           // line search could not decrease f any further
  MaxIterations,
  NonFinite,         // objective not finite at the starting point
};

inline std::string_view to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::Stalled: return "stalled";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::NonFinite: return "non_finite";
  }
  return "unknown";
}

struct LbfgsResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  LbfgsStatus status = LbfgsStatus::NonFinite;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), falling
// back to bisection when the interpolant is degenerate or leaves [lo, hi].
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0 && std::isfinite(disc)) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (db + d2 - d1) / denom;
  }
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (a + b);
  return t;
}

}  // namespace detail

/// Limited-memory BFGS with a strong-Wolfe line search.
///
/// `objective(x, grad)` returns f(x) and writes the gradient into `grad`. A
/// non-finite return marks x as outside the domain; the line search then
/// shrinks the step.
template <typename Objective>
LbfgsResult lbfgs_minimize(Objective&& objective, std::vector<double> x,
                           const LbfgsOptions& opt = {}) {
  using detail::dot;
  const std::size_t dim = x.size();
  std::vector<double> g(dim), g_new(dim), x_new(dim), dir(dim);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsResult res;
  double f = objective(x, g);
  if (!std::isfinite(f)) {
    res.x = std::move(x);
    return res;
  }

  auto finish = [&](LbfgsStatus status, int iterations) {
    res.x = x;
    res.value = f;
    res.gradient_norm = detail::norm2(g);
    res.iterations = iterations;
    res.status = status;
    return res;
  };

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (detail::norm2(g) <= opt.gradient_tolerance) return finish(LbfgsStatus::Converged, iter);

    // Two-loop recursion for dir = -H g.
    dir = g;
    std::vector<double> alpha_hist(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha_hist[i] = rho_hist[i] * dot(s_hist[i], dir);
      for (std::size_t k = 0; k < dim; ++k) dir[k] -= alpha_hist[i] * y_hist[i][k];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : dir) v *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], dir);
      for (std::size_t k = 0; k < dim; ++k) dir[k] += s_hist[i][k] * (alpha_hist[i] - beta);
    }
    for (auto& v : dir) v = -v;

    double slope0 = dot(g, dir);
    if (!(slope0 < 0.0)) {
      // Lost descent; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t k = 0; k < dim; ++k) dir[k] = -g[k];
      slope0 = dot(g, dir);
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / detail::norm2(g)) : 1.0;

    // Strong-Wolfe line search (bracketing phase, then zoom).
    auto eval = [&](double a, std::vector<double>& grad_out, double& slope) {
      for (std::size_t k = 0; k < dim; ++k) x_new[k] = x[k] + a * dir[k];
      const double fa = objective(x_new, grad_out);
      slope = dot(grad_out, dir);
      return fa;
    };

    double a_prev = 0.0, f_prev = f, d_prev = slope0;
    double accepted = -1.0, f_acc = f;
    bool have_hi = false;
    double a_lo = 0.0, f_lo = f, d_lo = slope0, a_hi = 0.0, f_hi = 0.0, d_hi = 0.0;
    int evals = 0;

    while (evals < opt.max_line_search) {
      double d_a = 0.0;
      const double f_a = eval(step, g_new, d_a);
      ++evals;
      if (!std::isfinite(f_a) || !std::isfinite(d_a)) {
        step = 0.5 * (a_prev + step);
        continue;
      }
      if (f_a > f + opt.c1 * step * slope0 || (evals > 1 && f_a >= f_prev)) {
        a_lo = a_prev, f_lo = f_prev, d_lo = d_prev;
        a_hi = step, f_hi = f_a, d_hi = d_a;
        have_hi = true;
        break;
      }
      if (std::abs(d_a) <= -opt.c2 * slope0) {
        accepted = step, f_acc = f_a;
        break;
      }
      if (d_a >= 0.0) {
        a_lo = step, f_lo = f_a, d_lo = d_a;
        a_hi = a_prev, f_hi = f_prev, d_hi = d_prev;
        have_hi = true;
        break;
      }
      a_prev = step, f_prev = f_a, d_prev = d_a;
      step *= 2.0;
    }

    if (accepted < 0.0 && have_hi) {
      while (evals < opt.max_line_search) {
        const double a = detail::cubic_step(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi);
        double d_a = 0.0;
        const double f_a = eval(a, g_new, d_a);
        ++evals;
        if (!std::isfinite(f_a) || !std::isfinite(d_a) || f_a > f + opt.c1 * a * slope0 ||
            f_a >= f_lo) {
          a_hi = a, f_hi = std::isfinite(f_a) ? f_a : f_lo + 1.0, d_hi = std::isfinite(d_a) ? d_a : 0.0;
        } else {
          if (std::abs(d_a) <= -opt.c2 * slope0) {
            accepted = a, f_acc = f_a;
            break;
          }
          if (d_a * (a_hi - a_lo) >= 0.0) a_hi = a_lo, f_hi = f_lo, d_hi = d_lo;
          a_lo = a, f_lo = f_a, d_lo = d_a;
        }
        if (std::abs(a_hi - a_lo) <= 1e-16 * std::max(1.0, a_lo)) break;
      }
      // Accept the best sufficient-decrease point even if curvature failed.
      if (accepted < 0.0 && a_lo > 0.0 && f_lo < f) {
        accepted = a_lo;
        double d_unused = 0.0;
        f_acc = eval(accepted, g_new, d_unused);
      }
    }

    if (accepted < 0.0 && !have_hi && a_prev > 0.0) {
      accepted = a_prev;
      double d_unused = 0.0;
      f_acc = eval(accepted, g_new, d_unused);
    }
    if (accepted < 0.0 || !(f_acc <= f)) return finish(LbfgsStatus::Stalled, iter);

    std::vector<double> s(dim), y(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      s[k] = x_new[k] - x[k];
      y[k] = g_new[k] - g[k];
    }
    const double sy = dot(s, y);
    const bool decreased = f_acc < f;
    x = x_new;
    g = g_new;
    f = f_acc;
    if (sy > 1e-300) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (!decreased) {
      return finish(detail::norm2(g) <= opt.gradient_tolerance ? LbfgsStatus::Converged
                                                               : LbfgsStatus::Stalled,
                    iter + 1);
    }
  }
  return finish(detail::norm2(g) <= opt.gradient_tolerance ? LbfgsStatus::Converged
                                                           : LbfgsStatus::MaxIterations,
                opt.max_iterations);
}

}  // namespace advscale

#endif  // ADVSCALE_LBFGS_HPP
