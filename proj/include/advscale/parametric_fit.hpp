#ifndef ADVSCALE_PARAMETRIC_FIT_HPP
#define ADVSCALE_PARAMETRIC_FIT_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "advscale/error.hpp"
#include "advscale/lbfgs.hpp"
#include "advscale/run_data.hpp"
#include "advscale/scaling_law.hpp"

namespace advscale {

/// One (N, D, FID, loss) observation a scaling law is fitted to.
struct FitPoint {
  double n = 0.0;
  double d = 0.0;
  double fid = 0.0;
  double loss = 0.0;
};

enum class LawForm { Approach2, Approach3 };

inline constexpr std::array<const char*, 7> kApproach2Names = {"a",    "b",       "e",   "alpha",
                                                               "beta", "epsilon", "zeta"};
inline constexpr std::array<const char*, 8> kApproach3Names = {"A",    "B",     "E",     "Q",
                                                               "alpha", "beta", "kappa", "epsilon"};

struct FitConfig {
  double huber_delta = 1e-3;
  // Initial values per parameter; every fit starts L-BFGS from each element of
  // the Cartesian product. Approach 2 names its coefficients in log space
  // (a = log A, ...); Approach 3 names them in natural units.
  std::map<std::string, std::vector<double>> init_grid;
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;
  int lbfgs_memory = 10;
  bool filter_enabled = true;
  // Fit to every observation of each run; when false, only final ones.
  bool use_all_observations = true;
  // Worker threads for grid starts; 0 picks the hardware concurrency.
  unsigned threads = 0;

  static FitConfig approach2() {
    FitConfig c;
    c.init_grid = {
        {"a", {0, 1, 2, 5, 10}},
        {"b", {0, 1, 2, 5, 10}},
        {"e", {-1, -0.5, 0, 0.5, 1}},
        {"alpha", {0, 0.1, 0.25, 0.5, 1}},
        {"beta", {0, 0.1, 0.25, 0.5, 1}},
        {"zeta", {-0.3, -0.15, 0.15, 0.3}},
        {"epsilon", {0.01, 0.1, 0.2}},
    };
    return c;
  }

  static FitConfig approach3() {
    FitConfig c;
    c.init_grid = {
        {"A", {5, 6, 7}},          {"B", {6500, 7000, 7500}}, {"E", {0.6, 0.5}},
        {"Q", {0.01, 0.5}},        {"alpha", {0.1, 0.2, 0.3}}, {"beta", {0.1, 0.2, 0.3}},
        {"kappa", {0.8, 0.6}},     {"epsilon", {0.01}},
    };
    return c;
  }

  LbfgsOptions lbfgs() const {
    LbfgsOptions o;
    o.memory = lbfgs_memory;
    o.max_iterations = max_iterations;
    o.gradient_tolerance = gradient_tolerance;
    return o;
  }

  void validate() const {
    if (!(huber_delta > 0.0)) throw UsageError("huber_delta must be positive");
    if (max_iterations < 1) throw UsageError("max_iterations must be >= 1");
    if (!(gradient_tolerance > 0.0)) throw UsageError("gradient_tolerance must be positive");
  }
};

// ---------------------------------------------------------------------------
// Filtering and point extraction

/// Small models on large, high-quality datasets underfit; these runs are
/// excluded from fitting.
inline bool fit_filter_drops(double n, double d, double fid) {
  return n < 1e8 && d > 1e7 && fid < 10.0;
}

inline bool fit_filter_drops(const RunRecord& run) {
  return fit_filter_drops(static_cast<double>(run.model.params_n),
                          static_cast<double>(run.dataset.size_samples), run.dataset.fid);
}

inline std::vector<RunRecord> apply_fit_filter(const std::vector<RunRecord>& runs) {
  std::vector<RunRecord> kept;
  for (const auto& r : runs) {
    if (!fit_filter_drops(r)) kept.push_back(r);
  }
  return kept;
}

inline std::vector<FitPoint> fit_points(const std::vector<RunRecord>& runs,
                                        bool all_observations = false) {
  std::vector<FitPoint> pts;
  for (const auto& r : runs) {
    const auto n = static_cast<double>(r.model.params_n);
    if (all_observations) {
      for (const auto& o : r.observations) {
        pts.push_back({n, static_cast<double>(o.samples_seen), r.dataset.fid, o.trades_loss});
      }
    } else {
      const auto& o = r.final_observation();
      pts.push_back({n, static_cast<double>(o.samples_seen), r.dataset.fid, o.trades_loss});
    }
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Huber objective over log residuals

inline double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

inline double huber_derivative(double r, double delta) {
  return std::abs(r) <= delta ? r : std::copysign(delta, r);
}

namespace detail {

inline void require_positive_losses(std::span<const FitPoint> pts) {
  for (const auto& p : pts) {
    if (!(p.loss > 0.0)) throw DomainError("observed loss must be positive");
    if (!(p.n > 0.0) || !(p.d > 0.0) || !(p.fid >= 0.0)) {
      throw DomainError("fit points need n > 0, d > 0, fid >= 0");
    }
  }
}

}  // namespace detail

/// A fit point with its logarithms precomputed.
struct LogPoint {
  double ln_n = 0.0;
  double ln_d = 0.0;
  double ln_loss = 0.0;
  double quality = 0.0;  // log(1 + FID)
  double fid = 0.0;
  double ln_fid = 0.0;   // log FID, unused at FID = 0
};

inline std::vector<LogPoint> prepare_points(std::span<const FitPoint> pts) {
  std::vector<LogPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    out.push_back({std::log(p.n), std::log(p.d), std::log(p.loss), quality_log_term(p.fid), p.fid,
                   p.fid > 0.0 ? std::log(p.fid) : 0.0});
  }
  return out;
}

/// Approach-2 objective in log-parameter space.
///
/// theta = [log A, log B, log E, alpha, beta, epsilon, zeta]. The quality
/// term of each point is log(1 + FID) - ref_log_quality, so a nonzero
/// reference anchors log B, log E at the reference dataset's quality.
/// Writes d/dtheta into `grad` when it is non-empty.
inline double objective_v2(std::span<const double> theta, std::span<const LogPoint> pts,
                           double delta, double ref_log_quality = 0.0,
                           std::span<double> grad = {}) {
  const double a = theta[0], b = theta[1], e = theta[2];
  const double alpha = theta[3], beta = theta[4], eps = theta[5], zeta = theta[6];
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (const auto& p : pts) {
    const double lq = p.quality - ref_log_quality;
    const double t1 = a - alpha * p.ln_n;
    const double t2 = b + lq * zeta - beta * p.ln_d;
    const double t3 = e + lq * eps;
    const double m = std::max({t1, t2, t3});
    const double w1 = std::exp(t1 - m), w2 = std::exp(t2 - m), w3 = std::exp(t3 - m);
    const double s = w1 + w2 + w3;
    const double r = m + std::log(s) - p.ln_loss;
    total += huber(r, delta);
    if (!grad.empty()) {
      const double h = huber_derivative(r, delta) / s;
      grad[0] += h * w1;
      grad[1] += h * w2;
      grad[2] += h * w3;
      grad[3] -= h * w1 * p.ln_n;
      grad[4] -= h * w2 * p.ln_d;
      grad[5] += h * w3 * lq;
      grad[6] += h * w2 * lq;
    }
  }
  return total;
}

inline double objective_v2(std::span<const double> theta, std::span<const FitPoint> pts,
                           double delta, double ref_log_quality = 0.0,
                           std::span<double> grad = {}) {
  return objective_v2(theta, prepare_points(pts), delta, ref_log_quality, grad);
}

/// Approach-3 objective in log-parameter space.
///
/// theta = [log A, log B, log E, log Q, alpha, beta, kappa, epsilon]. Returns
/// +inf where the predicted loss is not positive.
inline double objective_v3(std::span<const double> theta, std::span<const LogPoint> pts,
                           double delta, std::span<double> grad = {}) {
  const double a = theta[0], b = theta[1], E = std::exp(theta[2]);
  const double q = theta[3];
  const double alpha = theta[4], beta = theta[5], kappa = theta[6], eps = theta[7];
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (const auto& p : pts) {
    const double t1 = std::exp(a - alpha * p.ln_n);
    const double u = std::exp(b - p.ln_d);
    // v = (Q * FID)^(kappa / beta), zero at FID = 0.
    const double log_qf = p.fid > 0.0 ? q + p.ln_fid : 0.0;
    const double v = p.fid > 0.0 ? std::exp(kappa / beta * log_qf) : 0.0;
    const double S = u + v;
    const double ln_S = std::log(S);
    const double t2 = std::exp(beta * ln_S);
    const double t3 = E + p.quality * eps;
    const double pred = t1 + t2 + t3;
    if (!(pred > 0.0) || !std::isfinite(pred)) {
      std::fill(grad.begin(), grad.end(), 0.0);
      return std::numeric_limits<double>::infinity();
    }
    const double r = std::log(pred) - p.ln_loss;
    total += huber(r, delta);
    if (!grad.empty()) {
      const double h = huber_derivative(r, delta) / pred;
      const double t2_over_S = t2 / S;
      grad[0] += h * t1;
      grad[1] += h * beta * t2_over_S * u;
      grad[2] += h * E;
      grad[3] += h * kappa * t2_over_S * v;
      grad[4] -= h * t1 * p.ln_n;
      grad[5] += h * t2 * (ln_S - kappa / beta * v * log_qf / S);
      grad[6] += h * t2_over_S * v * log_qf;
      grad[7] += h * p.quality;
    }
  }
  return total;
}

inline double objective_v3(std::span<const double> theta, std::span<const FitPoint> pts,
                           double delta, std::span<double> grad = {}) {
  return objective_v3(theta, prepare_points(pts), delta, grad);
}

inline std::array<double, 7> to_theta(const Approach2Params& p) {
  return {std::log(p.A), std::log(p.B), std::log(p.E), p.alpha, p.beta, p.epsilon, p.zeta};
}

inline std::array<double, 8> to_theta(const Approach3Params& p) {
  return {std::log(p.A), std::log(p.B), std::log(p.E), std::log(p.Q),
          p.alpha,       p.beta,        p.kappa,       p.epsilon};
}

inline Approach2Params approach2_from_theta(std::span<const double> t) {
  return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2]), t[3], t[4], t[5], t[6]};
}

inline Approach3Params approach3_from_theta(std::span<const double> t) {
  return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2]), std::exp(t[3]),
          t[4],           t[5],           t[6],           t[7]};
}

/// Sum over points of Huber(log predicted - log observed; delta).
inline double huber_logspace_objective(const Approach2Params& p, std::span<const FitPoint> pts,
                                       double delta = 1e-3) {
  detail::require_positive_losses(pts);
  const auto theta = to_theta(p);
  return objective_v2(theta, pts, delta);
}

inline double huber_logspace_objective(const Approach3Params& p, std::span<const FitPoint> pts,
                                       double delta = 1e-3) {
  detail::require_positive_losses(pts);
  const auto theta = to_theta(p);
  return objective_v3(theta, pts, delta);
}

// ---------------------------------------------------------------------------
// Grid-started L-BFGS

struct StartResult {
  std::size_t index = 0;
  std::vector<double> init;   // free parameters at the start
  std::vector<double> final;  // free parameters at termination
  double objective = std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  LbfgsStatus status = LbfgsStatus::NonFinite;

  // Starts that reached a stationary point (gradient tolerance, or a line
  // search that can no longer decrease the objective).
  bool usable() const {
    return std::isfinite(objective) &&
           (status == LbfgsStatus::Converged || status == LbfgsStatus::Stalled);
  }
};

struct StageReport {
  std::string name;
  std::vector<std::string> parameter_names;
  std::size_t points = 0;
  std::vector<StartResult> starts;
  std::size_t winner = 0;  // index into starts

  const StartResult& best() const { return starts.at(winner); }
};

template <typename Params>
struct FitReport {
  Params params;
  FitConfig config;
  std::vector<StageReport> stages;
  std::vector<std::string> dropped_runs;
};

using Approach2Fit = FitReport<Approach2Params>;
using Approach3Fit = FitReport<Approach3Params>;

namespace detail {

// Row-major Cartesian product of the named grids, first name varying slowest.
inline std::vector<std::vector<double>> cartesian_grid(const FitConfig& cfg,
                                                       const std::vector<std::string>& names) {
  std::vector<std::vector<double>> out{{}};
  for (const auto& name : names) {
    auto it = cfg.init_grid.find(name);
    if (it == cfg.init_grid.end() || it->second.empty()) {
      throw UsageError("init_grid has no values for parameter '" + name + "'");
    }
    std::vector<std::vector<double>> next;
    next.reserve(out.size() * it->second.size());
    for (const auto& prefix : out) {
      for (double v : it->second) {
        auto row = prefix;
        row.push_back(v);
        next.push_back(std::move(row));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline std::string describe_starts(const StageReport& st) {
  std::ostringstream os;
  os << "stage '" << st.name << "' (" << st.points << " points):\n";
  for (const auto& s : st.starts) {
    os << "  start " << s.index << ": status=" << to_string(s.status)
       << " objective=" << s.objective << " |grad|=" << s.gradient_norm
       << " iterations=" << s.iterations << '\n';
  }
  return os.str();
}

// Runs L-BFGS from every start. `objective(x, grad)` evaluates the free
// parameters. Results are stored by start index, so the winner (minimum
// objective, lowest index on ties) does not depend on thread scheduling.
template <typename Objective>
StageReport run_stage(std::string name, std::vector<std::string> param_names,
                      std::size_t n_points, const std::vector<std::vector<double>>& starts,
                      const Objective& objective, const FitConfig& cfg) {
  StageReport st;
  st.name = std::move(name);
  st.parameter_names = std::move(param_names);
  st.points = n_points;
  st.starts.resize(starts.size());
  const LbfgsOptions opt = cfg.lbfgs();

  auto work = [&](std::size_t i) {
    auto f = [&](const std::vector<double>& x, std::vector<double>& g) { return objective(x, g); };
    LbfgsResult r = lbfgs_minimize(f, starts[i], opt);
    StartResult& s = st.starts[i];
    s.index = i;
    s.init = starts[i];
    s.final = std::move(r.x);
    s.objective = r.value;
    s.gradient_norm = r.gradient_norm;
    s.iterations = r.iterations;
    s.status = r.status;
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, starts.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < starts.size(); i = next++) work(i);
      });
    }
  }

  std::optional<std::size_t> winner;
  for (std::size_t i = 0; i < st.starts.size(); ++i) {
    if (!st.starts[i].usable()) continue;
    if (!winner || st.starts[i].objective < st.starts[*winner].objective) winner = i;
  }
  if (!winner) {
    throw FitError("no grid start of stage '" + st.name + "' converged", describe_starts(st));
  }
  st.winner = *winner;
  return st;
}

struct PointSummary {
  std::size_t distinct_points = 0;
  std::size_t distinct_n = 0;
  std::size_t distinct_d = 0;
  std::size_t distinct_fid = 0;
};

inline PointSummary summarize(std::span<const FitPoint> pts) {
  std::set<std::tuple<double, double, double>> all;
  std::set<double> ns, ds, fids;
  for (const auto& p : pts) {
    all.emplace(p.n, p.d, p.fid);
    ns.insert(p.n);
    ds.insert(p.d);
    fids.insert(p.fid);
  }
  return {all.size(), ns.size(), ds.size(), fids.size()};
}

inline void require_identifiable(std::span<const FitPoint> pts, std::size_t n_params,
                                 bool need_sizes, std::size_t min_fids, const std::string& stage) {
  const auto s = summarize(pts);
  std::ostringstream diag;
  diag << "stage '" << stage << "': " << pts.size() << " points, " << s.distinct_points
       << " distinct (n, d, fid), " << s.distinct_n << " distinct n, " << s.distinct_d
       << " distinct d, " << s.distinct_fid << " distinct fid; " << n_params
       << " free parameters\n";
  if (s.distinct_points < n_params || (need_sizes && (s.distinct_n < 2 || s.distinct_d < 2)) ||
      s.distinct_fid < min_fids) {
    throw FitError("fit is not identifiable from the given runs", diag.str());
  }
}

}  // namespace detail

/// Two-stage Approach-2 fit.
///
/// Stage 1 fits (log A, log B, log E, alpha, beta) to `base_runs`, which must
/// all come from one generator; there B and E absorb that generator's
/// quality. Stage 2 freezes them and fits (epsilon, zeta) to `quality_runs`
/// with the quality term measured relative to the base generator. The
/// reported B and E are then carried back to FID = 0.
inline Approach2Fit fit_approach2(const std::vector<RunRecord>& base_runs,
                                  const std::vector<RunRecord>& quality_runs,
                                  const FitConfig& cfg = FitConfig::approach2()) {
  cfg.validate();
  if (base_runs.empty()) throw UsageError("fit_approach2: no stage-1 runs");
  const auto& generator = base_runs.front().dataset.generator;
  const double base_fid = base_runs.front().dataset.fid;
  for (const auto& r : base_runs) {
    if (r.dataset.generator != generator || r.dataset.fid != base_fid) {
      throw UsageError("fit_approach2: stage-1 runs must share one dataset generator");
    }
  }

  Approach2Fit report;
  report.config = cfg;
  auto keep = [&](const std::vector<RunRecord>& runs) {
    if (!cfg.filter_enabled) return runs;
    for (const auto& r : runs) {
      if (fit_filter_drops(r)) report.dropped_runs.push_back(r.run_id);
    }
    return apply_fit_filter(runs);
  };
  const auto base_pts = fit_points(keep(base_runs), cfg.use_all_observations);
  const auto quality_pts = fit_points(keep(quality_runs), cfg.use_all_observations);
  detail::require_positive_losses(base_pts);
  detail::require_positive_losses(quality_pts);
  const auto base_log = prepare_points(base_pts);
  const auto quality_log = prepare_points(quality_pts);

  // Stage 1
  const std::vector<std::string> names1 = {"a", "b", "e", "alpha", "beta"};
  detail::require_identifiable(base_pts, names1.size(), true, 1, "base");
  auto obj1 = [&](const std::vector<double>& x, std::vector<double>& g) {
    const std::array<double, 7> theta = {x[0], x[1], x[2], x[3], x[4], 0.0, 0.0};
    std::array<double, 7> full{};
    const double f = objective_v2(theta, base_log, cfg.huber_delta, 0.0, full);
    std::copy_n(full.begin(), 5, g.begin());
    return f;
  };
  report.stages.push_back(detail::run_stage("base", names1, base_pts.size(),
                                            detail::cartesian_grid(cfg, names1), obj1, cfg));
  const auto& w1 = report.stages.back().best().final;

  // Stage 2
  const double ref = quality_log_term(base_fid);
  const std::vector<std::string> names2 = {"zeta", "epsilon"};
  detail::require_identifiable(quality_pts, names2.size(), false, 2, "quality");
  const std::array<double, 5> frozen = {w1[0], w1[1], w1[2], w1[3], w1[4]};
  auto obj2 = [&](const std::vector<double>& x, std::vector<double>& g) {
    const std::array<double, 7> theta = {frozen[0], frozen[1], frozen[2], frozen[3],
                                         frozen[4], x[1],      x[0]};
    std::array<double, 7> full{};
    const double f = objective_v2(theta, quality_log, cfg.huber_delta, ref, full);
    g[0] = full[6];
    g[1] = full[5];
    return f;
  };
  report.stages.push_back(detail::run_stage("quality", names2, quality_pts.size(),
                                            detail::cartesian_grid(cfg, names2), obj2, cfg));
  const auto& w2 = report.stages.back().best().final;
  const double zeta = w2[0], eps = w2[1];

  report.params = Approach2Params{std::exp(frozen[0]), std::exp(frozen[1] - ref * zeta),
                                  std::exp(frozen[2] - ref * eps), frozen[3], frozen[4], eps,
                                  zeta};
  return report;
}

/// Convenience overload: splits `runs` into the base generator's runs and
/// everything else.
inline Approach2Fit fit_approach2(const std::vector<RunRecord>& runs,
                                  const std::string& base_generator,
                                  const FitConfig& cfg = FitConfig::approach2()) {
  std::vector<RunRecord> base, quality;
  for (const auto& r : runs) (r.dataset.generator == base_generator ? base : quality).push_back(r);
  return fit_approach2(base, quality, cfg);
}

/// Single-stage fit of all eight Approach-3 parameters.
inline Approach3Fit fit_approach3(const std::vector<RunRecord>& runs,
                                  const FitConfig& cfg = FitConfig::approach3()) {
  cfg.validate();
  Approach3Fit report;
  report.config = cfg;
  std::vector<RunRecord> used = runs;
  if (cfg.filter_enabled) {
    for (const auto& r : runs) {
      if (fit_filter_drops(r)) report.dropped_runs.push_back(r.run_id);
    }
    used = apply_fit_filter(runs);
  }
  const auto pts = fit_points(used, cfg.use_all_observations);
  detail::require_positive_losses(pts);

  const std::vector<std::string> names(kApproach3Names.begin(), kApproach3Names.end());
  detail::require_identifiable(pts, names.size(), true, 2, "all");
  auto starts = detail::cartesian_grid(cfg, names);
  for (auto& s : starts) {
    for (int k = 0; k < 4; ++k) {
      if (!(s[k] > 0.0)) throw UsageError("Approach-3 grid values for A, B, E, Q must be positive");
      s[k] = std::log(s[k]);
    }
  }
  const auto log_pts = prepare_points(pts);
  auto obj = [&](const std::vector<double>& x, std::vector<double>& g) {
    return objective_v3(x, log_pts, cfg.huber_delta, g);
  };
  report.stages.push_back(detail::run_stage("all", names, pts.size(), starts, obj, cfg));
  report.params = approach3_from_theta(report.stages.back().best().final);
  return report;
}

// ---------------------------------------------------------------------------
// Parameter records

inline json params_to_json(const Approach2Params& p) {
  return json{{"A", p.A},         {"B", p.B},         {"E", p.E},      {"alpha", p.alpha},
              {"beta", p.beta},   {"epsilon", p.epsilon}, {"zeta", p.zeta}};
}

inline json params_to_json(const Approach3Params& p) {
  return json{{"A", p.A},         {"B", p.B},         {"E", p.E},         {"Q", p.Q},
              {"alpha", p.alpha}, {"beta", p.beta},   {"kappa", p.kappa}, {"epsilon", p.epsilon}};
}

inline Approach2Params approach2_from_json(const json& j) {
  return {j.at("A").get<double>(),     j.at("B").get<double>(),       j.at("E").get<double>(),
          j.at("alpha").get<double>(), j.at("beta").get<double>(),    j.at("epsilon").get<double>(),
          j.at("zeta").get<double>()};
}

inline Approach3Params approach3_from_json(const json& j) {
  return {j.at("A").get<double>(),     j.at("B").get<double>(),    j.at("E").get<double>(),
          j.at("Q").get<double>(),     j.at("alpha").get<double>(), j.at("beta").get<double>(),
          j.at("kappa").get<double>(), j.at("epsilon").get<double>()};
}

inline const char* form_name(LawForm f) {
  return f == LawForm::Approach2 ? "approach2" : "approach3";
}

inline json config_to_json(const FitConfig& c) {
  json grid = json::object();
  for (const auto& [k, v] : c.init_grid) grid[k] = v;
  return json{{"huber_delta", c.huber_delta},
              {"max_iterations", c.max_iterations},
              {"gradient_tolerance", c.gradient_tolerance},
              {"lbfgs_memory", c.lbfgs_memory},
              {"line_search", "strong_wolfe"},
              {"filter_enabled", c.filter_enabled},
              {"use_all_observations", c.use_all_observations},
              {"init_grid", grid}};
}

inline json stage_to_json(const StageReport& st) {
  json starts = json::array();
  for (const auto& s : st.starts) {
    starts.push_back(json{{"index", s.index},
                          {"init", s.init},
                          {"final", s.final},
                          {"objective", std::isfinite(s.objective) ? json(s.objective) : json()},
                          {"gradient_norm",
                           std::isfinite(s.gradient_norm) ? json(s.gradient_norm) : json()},
                          {"iterations", s.iterations},
                          {"status", std::string(to_string(s.status))}});
  }
  return json{{"name", st.name},
              {"parameters", st.parameter_names},
              {"points", st.points},
              {"winner", st.winner},
              {"starts", starts}};
}

/// Full provenance record of a fit: parameters, configuration, seed and the
/// per-start objective table of every stage.
template <typename Params>
json fit_to_json(const FitReport<Params>& fit, std::int64_t seed = 0) {
  constexpr bool v2 = std::is_same_v<Params, Approach2Params>;
  json stages = json::array();
  for (const auto& st : fit.stages) stages.push_back(stage_to_json(st));
  return json{{"form", v2 ? "approach2" : "approach3"},
              {"params", params_to_json(fit.params)},
              {"config", config_to_json(fit.config)},
              {"seed", seed},
              {"dropped_runs", fit.dropped_runs},
              {"stages", stages}};
}

using AnyParams = std::variant<Approach2Params, Approach3Params>;

/// Reads a parameter record: {"form": "approach2"|"approach3", "params": {...}}.
/// Extra provenance fields are ignored.
inline AnyParams params_from_json(const json& j) {
  try {
    const auto form = j.at("form").get<std::string>();
    if (form == "approach2") return approach2_from_json(j.at("params"));
    if (form == "approach3") return approach3_from_json(j.at("params"));
    throw DataError("unknown parameter form '" + form + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed parameter record: ") + e.what());
  }
}

inline json params_record(const AnyParams& p) {
  return std::visit(
      [](const auto& v) {
        constexpr bool v2 = std::is_same_v<std::decay_t<decltype(v)>, Approach2Params>;
        return json{{"form", v2 ? "approach2" : "approach3"}, {"params", params_to_json(v)}};
      },
      p);
}

inline AnyParams load_params(const std::string& path) {
  auto in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("'" + path + "': " + e.what());
  }
  return params_from_json(j);
}

}  // namespace advscale

#endif  // ADVSCALE_PARAMETRIC_FIT_HPP
