#ifndef ADVSCALE_ENVELOPE_HPP
#define ADVSCALE_ENVELOPE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advscale/error.hpp"
#include "advscale/regression.hpp"
#include "advscale/run_data.hpp"

namespace advscale {

struct EnvelopePoint {
  double flops = 0.0;
  double loss = 0.0;
  double n_star = 0.0;
  double d_star = 0.0;  // flops / (nd_coefficient * n_star)
  std::string run_id;
};

struct EnvelopeOptions {
  int n_query = 1000;
  // Replace each learning curve by its running minimum before taking the
  // envelope. Off by default.
  bool trailing_minimum = false;
  double nd_coefficient = kFlopsPerParamSample;
};

/// Points of an envelope with strictly increasing FLOPs and strictly
/// decreasing loss.
struct MonotoneQuerySet {
  std::vector<EnvelopePoint> points;
};

struct PowerLawFit {
  double exponent = 0.0;
  double log10_coefficient = 0.0;
  double r_squared = 0.0;

  double predict(double x) const {
    return std::pow(10.0, log10_coefficient + exponent * std::log10(x));
  }
};

struct EnvelopeFits {
  PowerLawFit n_fit;  // N* ~ FLOPs^a
  PowerLawFit d_fit;  // D* ~ FLOPs^b
  PowerLawFit l_fit;  // L* ~ FLOPs^c

  double a() const { return n_fit.exponent; }
  double b() const { return d_fit.exponent; }
};

/// Lowest step-interpolated loss over all runs at `n_query` log-spaced FLOPs
/// values spanning the observed range.
///
/// A run's loss at budget f is the loss of its last observation with
/// train_flops <= f; runs with no such observation sit out. Ties go to the
/// smaller model.
inline std::vector<EnvelopePoint> compute_envelope(const std::vector<RunRecord>& runs,
                                                   const EnvelopeOptions& opt = {}) {
  if (runs.size() < 2) throw UsageError("compute_envelope needs at least two runs");
  if (opt.n_query < 1) throw UsageError("n_query must be >= 1");
  const auto& generator = runs.front().dataset.generator;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : runs) {
    if (r.dataset.generator != generator) {
      throw UsageError("compute_envelope: runs mix dataset generators ('" + generator + "', '" +
                       r.dataset.generator + "')");
    }
    if (r.observations.size() < 2) {
      throw UsageError("compute_envelope: run '" + r.run_id + "' has fewer than two observations");
    }
    lo = std::min(lo, r.observations.front().train_flops);
    hi = std::max(hi, r.observations.back().train_flops);
  }

  // Curves as (flops, loss), optionally smoothed by a running minimum.
  std::vector<std::vector<std::pair<double, double>>> curves;
  curves.reserve(runs.size());
  for (const auto& r : runs) {
    std::vector<std::pair<double, double>> c;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : r.observations) {
      best = std::min(best, o.trades_loss);
      c.emplace_back(o.train_flops, opt.trailing_minimum ? best : o.trades_loss);
    }
    curves.push_back(std::move(c));
  }

  std::vector<EnvelopePoint> out;
  out.reserve(static_cast<std::size_t>(opt.n_query));
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < opt.n_query; ++i) {
    double f;
    if (opt.n_query == 1) {
      f = hi;
    } else if (i == 0) {
      f = lo;
    } else if (i == opt.n_query - 1) {
      f = hi;
    } else {
      f = std::pow(10.0, llo + (lhi - llo) * i / (opt.n_query - 1));
    }
    std::optional<std::size_t> best;
    double best_loss = 0.0;
    for (std::size_t k = 0; k < curves.size(); ++k) {
      const auto& c = curves[k];
      auto it = std::upper_bound(c.begin(), c.end(), f,
                                 [](double v, const auto& p) { return v < p.first; });
      if (it == c.begin()) continue;
      const double loss = std::prev(it)->second;
      if (!best || loss < best_loss ||
          (loss == best_loss && runs[k].model.params_n < runs[*best].model.params_n)) {
        best = k;
        best_loss = loss;
      }
    }
    if (!best) continue;
    const auto n = static_cast<double>(runs[*best].model.params_n);
    out.push_back({f, best_loss, n, f / (opt.nd_coefficient * n), runs[*best].run_id});
  }
  return out;
}

/// Keeps the points that improve on every cheaper point: a point survives
/// only if its loss is strictly below the loss of all points before it.
inline MonotoneQuerySet monotone_filter(std::span<const EnvelopePoint> points) {
  MonotoneQuerySet q;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    if (p.loss < best) {
      q.points.push_back(p);
      best = p.loss;
    }
  }
  return q;
}

inline PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("power-law fit needs positive data");
    lx.push_back(std::log10(x[i]));
    ly.push_back(std::log10(y[i]));
  }
  const auto f = ordinary_least_squares(lx, ly);
  return {f.slope, f.intercept, f.r_squared};
}

/// Unweighted log10-log10 regressions of N*, D* and L* on FLOPs.
inline EnvelopeFits fit_power_laws(const MonotoneQuerySet& q) {
  if (q.points.size() < 3) {
    throw UsageError("fit_power_laws needs at least 3 envelope points, got " +
                     std::to_string(q.points.size()));
  }
  std::vector<double> f, n, d, l;
  for (const auto& p : q.points) {
    f.push_back(p.flops);
    n.push_back(p.n_star);
    d.push_back(p.d_star);
    l.push_back(p.loss);
  }
  return {fit_power_law(f, n), fit_power_law(f, d), fit_power_law(f, l)};
}

}  // namespace advscale

#endif  // ADVSCALE_ENVELOPE_HPP
