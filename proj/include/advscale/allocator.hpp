#ifndef ADVSCALE_ALLOCATOR_HPP
#define ADVSCALE_ALLOCATOR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "advscale/brent.hpp"
#include "advscale/error.hpp"
#include "advscale/parametric_fit.hpp"
#include "advscale/regression.hpp"
#include "advscale/run_data.hpp"
#include "advscale/scaling_law.hpp"

namespace advscale {

/// Compute-optimal (N*, D*) at a FLOPs budget under FLOPs = k * N * D, with
/// N* = g * (FLOPs / k)^a and D* = (FLOPs / k)^b / g.
struct Allocation {
  double flops = 0.0;
  double fid = 0.0;
  double n_star = 0.0;
  double d_star = 0.0;
  double l_star = 0.0;
  double a = 0.0;
  double b = 0.0;
  double g = 0.0;
  // a, b are finite-difference log-slopes at this budget rather than global
  // power-law exponents.
  bool local_exponents = false;
  // The numeric minimizer hit an end of its search interval.
  bool boundary_warning = false;
};

inline Allocation optimal_allocation_v2(double flops, double fid, const Approach2Params& p,
                                        double nd_coefficient = kFlopsPerParamSample) {
  if (!(flops > 0.0)) throw DomainError("flops must be positive");
  if (!(fid >= 0.0)) throw DomainError("fid must be >= 0");
  const double sum = p.alpha + p.beta;
  if (sum == 0.0) throw DomainError("alpha + beta = 0: allocation exponents are undefined");
  const double b_eff = p.effective_B(fid);
  Allocation out;
  out.flops = flops;
  out.fid = fid;
  out.a = p.beta / sum;
  out.b = p.alpha / sum;
  out.g = std::pow(p.alpha * p.A / (p.beta * b_eff), 1.0 / sum);
  const double budget = flops / nd_coefficient;
  out.n_star = out.g * std::pow(budget, out.a);
  out.d_star = std::pow(budget, out.b) / out.g;
  out.l_star = loss_v2(out.n_star, out.d_star, fid, p);
  return out;
}

struct NumericAllocationOptions {
  double n_min = 1e6;
  double n_max = 1e13;
  double rel_tol = 1e-8;
  // Half-width, in decades of FLOPs, of the central difference used for the
  // local exponents.
  double exponent_step_decades = 0.1;
  double nd_coefficient = kFlopsPerParamSample;
};

namespace detail {

struct NumericOptimum {
  double n = 0.0;
  double loss = 0.0;
  bool at_boundary = false;
};

inline NumericOptimum minimize_on_constraint(double flops, double fid, const Approach3Params& p,
                                             const NumericAllocationOptions& opt) {
  const double budget = flops / opt.nd_coefficient;
  auto f = [&](double log_n) {
    const double n = std::exp(log_n);
    return loss_v3(n, budget / n, fid, p);
  };
  const auto m = brent_minimize(f, std::log(opt.n_min), std::log(opt.n_max), opt.rel_tol);
  return {std::exp(m.x), m.value, m.at_boundary};
}

}  // namespace detail

/// Numeric allocation for the quality-bottleneck law: minimizes loss over
/// log N along D = FLOPs / (k N). a, b come from a central difference of
/// log N*, log D* in log FLOPs.
inline Allocation optimal_allocation_v3(double flops, double fid, const Approach3Params& p,
                                        const NumericAllocationOptions& opt = {}) {
  if (!(flops > 0.0)) throw DomainError("flops must be positive");
  if (!(fid >= 0.0)) throw DomainError("fid must be >= 0");
  const auto mid = detail::minimize_on_constraint(flops, fid, p, opt);
  const double step = std::pow(10.0, opt.exponent_step_decades);
  const auto up = detail::minimize_on_constraint(flops * step, fid, p, opt);
  const auto down = detail::minimize_on_constraint(flops / step, fid, p, opt);

  Allocation out;
  out.flops = flops;
  out.fid = fid;
  out.n_star = mid.n;
  const double budget = flops / opt.nd_coefficient;
  out.d_star = budget / mid.n;
  out.l_star = loss_v3(out.n_star, out.d_star, fid, p);
  const double dlogf = 2.0 * std::log(step);
  out.a = std::log(up.n / down.n) / dlogf;
  out.b = 1.0 - out.a;  // log D* = log(FLOPs / k) - log N*
  out.g = out.n_star / std::pow(budget, out.a);
  out.local_exponents = true;
  out.boundary_warning = mid.at_boundary;
  return out;
}

inline Allocation optimal_allocation(double flops, double fid, const AnyParams& p) {
  return std::visit(
      [&](const auto& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Approach2Params>) {
          return optimal_allocation_v2(flops, fid, v);
        } else {
          return optimal_allocation_v3(flops, fid, v);
        }
      },
      p);
}

// ---------------------------------------------------------------------------
// Model-size / compute-overhead tradeoff

struct OverheadPoint {
  double omega_n = 1.0;
  double omega_d = 1.0;
  double overhead_pct = 0.0;
};

/// Dataset multiplier that keeps the Approach-2 loss at its compute-optimal
/// value when the model is resized to omega_n * N*:
///
///   omega_d = (1 - (omega_n^-alpha - 1) * A N*^-alpha / (B' D*^-beta))^(-1/beta)
///
/// Throws InfeasibleError when no dataset size can compensate.
inline std::vector<OverheadPoint> overhead_curve(double flops, double fid,
                                                 const Approach2Params& p,
                                                 std::span<const double> omega_n_list) {
  const auto opt = optimal_allocation_v2(flops, fid, p);
  const double ratio = (p.A * std::pow(opt.n_star, -p.alpha)) /
                       (p.effective_B(fid) * std::pow(opt.d_star, -p.beta));
  std::vector<OverheadPoint> out;
  out.reserve(omega_n_list.size());
  for (double wn : omega_n_list) {
    if (!(wn > 0.0)) throw DomainError("omega_n must be positive");
    const double radicand = 1.0 - (std::pow(wn, -p.alpha) - 1.0) * ratio;
    if (!(radicand > 0.0)) {
      throw InfeasibleError("omega_n = " + std::to_string(wn) +
                            " is too small: no dataset size reaches the optimal loss");
    }
    OverheadPoint pt;
    pt.omega_n = wn;
    pt.omega_d = wn == 1.0 ? 1.0 : std::pow(radicand, -1.0 / p.beta);
    pt.overhead_pct = (pt.omega_n * pt.omega_d - 1.0) * 100.0;
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss to accuracy

struct LossAccuracyMap {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;

  static LossAccuracyMap published() { return {-0.7496, 1.2575, 0.98}; }

  double predict(double loss) const { return intercept + slope * loss; }
  double accuracy(double loss) const { return std::clamp(predict(loss), 0.0, 1.0); }
};

/// Regresses adversarial accuracy on loss using, from every run with
/// accuracy data, the evaluated observation with the lowest loss.
inline LossAccuracyMap fit_loss_accuracy(const std::vector<RunRecord>& runs) {
  std::vector<double> loss, acc;
  for (const auto& r : runs) {
    const Observation* best = nullptr;
    for (const auto& o : r.observations) {
      if (o.adv_acc && (!best || o.trades_loss < best->trades_loss)) best = &o;
    }
    if (best) {
      loss.push_back(best->trades_loss);
      acc.push_back(*best->adv_acc);
    }
  }
  if (loss.size() < 3) {
    throw UsageError("fit_loss_accuracy needs at least 3 runs with adv_acc, got " +
                     std::to_string(loss.size()));
  }
  const auto fit = ordinary_least_squares(loss, acc);
  if (!(fit.slope < 0.0)) {
    throw DataError("loss-accuracy slope is not negative (" + std::to_string(fit.slope) + ")");
  }
  return {fit.slope, fit.intercept, fit.r_squared};
}

// ---------------------------------------------------------------------------
// Robustness frontier

struct FrontierRow {
  double fid = 0.0;
  double flops = 0.0;
  double n_star = 0.0;
  double d_star = 0.0;
  double l_star = 0.0;
  double accuracy = 0.0;
};

struct FrontierAsymptote {
  double fid = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct FrontierTable {
  std::vector<FrontierRow> rows;
  std::vector<FrontierAsymptote> asymptotes;
};

/// Irreducible loss as N, D -> infinity, evaluated symbolically.
inline double loss_asymptote(const AnyParams& p, double fid) {
  return std::visit(
      [&](const auto& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Approach2Params>) {
          return v.effective_E(fid);
        } else {
          return v.asymptote(fid);
        }
      },
      p);
}

inline FrontierTable frontier(const AnyParams& p, const LossAccuracyMap& map,
                              std::span<const double> fid_list,
                              std::span<const double> flops_grid) {
  for (std::size_t i = 1; i < flops_grid.size(); ++i) {
    if (!(flops_grid[i] > flops_grid[i - 1])) {
      throw UsageError("flops grid must be strictly increasing");
    }
  }
  FrontierTable t;
  for (double fid : fid_list) {
    for (double f : flops_grid) {
      const auto a = optimal_allocation(f, fid, p);
      t.rows.push_back({fid, f, a.n_star, a.d_star, a.l_star, map.accuracy(a.l_star)});
    }
    const double l = loss_asymptote(p, fid);
    t.asymptotes.push_back({fid, l, map.accuracy(l)});
  }
  return t;
}

}  // namespace advscale

#endif  // ADVSCALE_ALLOCATOR_HPP
