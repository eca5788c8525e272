#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "advscale/parametric_fit.hpp"
#include "advscale/synthgen.hpp"

using namespace advscale;

namespace {

std::vector<RunRecord> approach2_runs(int points, double sigma = 0.0, std::uint64_t seed = 0) {
  std::vector<RunRecord> runs;
  std::uint64_t k = 0;
  for (auto g : {"DG", "EDM-7", "EDM-10", "EDM-20"}) {
    auto d = catalog_design(*find_dataset(g));
    d.eval_points_per_run = points;
    d.noise_sigma = sigma;
    d.seed = seed + 100 * k++;
    auto r = generate_runs(Approach2Params::published(), d);
    runs.insert(runs.end(), r.begin(), r.end());
  }
  return runs;
}

std::vector<RunRecord> approach3_runs(int points, double sigma = 0.0, std::uint64_t seed = 0) {
  std::vector<RunRecord> runs;
  std::uint64_t k = 0;
  for (const auto& g : dataset_catalog()) {
    auto d = catalog_design(g);
    d.eval_points_per_run = points;
    d.noise_sigma = sigma;
    d.seed = seed + 100 * k++;
    auto r = generate_runs(Approach3Params::published(), d);
    runs.insert(runs.end(), r.begin(), r.end());
  }
  return runs;
}

FitConfig small_grid2() {
  auto c = FitConfig::approach2();
  c.init_grid = {{"a", {1, 2}},        {"b", {1, 2}},         {"e", {-1, 0}},
                 {"alpha", {0.1, 0.5}}, {"beta", {0.1, 0.5}}, {"zeta", {-0.1, 0.1}},
                 {"epsilon", {0.05, 0.2}}};
  return c;
}

FitConfig single_start3() {
  auto c = FitConfig::approach3();
  c.init_grid = {{"A", {5}},       {"B", {6500}},  {"E", {0.6}},     {"Q", {0.01}},
                 {"alpha", {0.2}}, {"beta", {0.2}}, {"kappa", {0.8}}, {"epsilon", {0.01}}};
  return c;
}

// Largest relative deviation between the analytic gradient and a central
// difference with step h, with components compared against the gradient norm
// when they are tiny.
template <typename F>
double gradient_error(F f, std::vector<double> theta, double h = 1e-6) {
  std::vector<double> g(theta.size());
  f(theta, g);
  double gnorm = 0.0;
  for (double v : g) gnorm += v * v;
  gnorm = std::sqrt(gnorm);
  double worst = 0.0;
  std::vector<double> scratch(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto up = theta, dn = theta;
    up[i] += h;
    dn[i] -= h;
    const double fd = (f(up, scratch) - f(dn, scratch)) / (2.0 * h);
    const double scale = std::max({std::abs(g[i]), std::abs(fd), 1e-3 * gnorm});
    worst = std::max(worst, std::abs(fd - g[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST(Huber, Branches) {
  EXPECT_DOUBLE_EQ(huber(5e-4, 1e-3), 0.5 * 5e-4 * 5e-4);
  EXPECT_DOUBLE_EQ(huber(-1e-3, 1e-3), 0.5e-6);
  EXPECT_DOUBLE_EQ(huber(0.01, 1e-3), 1e-3 * (0.01 - 0.5e-3));
  EXPECT_DOUBLE_EQ(huber(-0.01, 1e-3), huber(0.01, 1e-3));
  EXPECT_DOUBLE_EQ(huber_derivative(0.01, 1e-3), 1e-3);
  EXPECT_DOUBLE_EQ(huber_derivative(-5e-4, 1e-3), -5e-4);
}

TEST(FitFilter, Examples) {
  EXPECT_TRUE(fit_filter_drops(6e6, 3e7, 1.65));
  EXPECT_FALSE(fit_filter_drops(1.78e8, 1e8, 1.65));
  EXPECT_FALSE(fit_filter_drops(6e6, 3e7, 35.54));
  EXPECT_FALSE(fit_filter_drops(6e6, 1e7, 1.65));  // d must exceed 1e7
}

TEST(FitFilter, DropsExactlyThePredicate) {
  const auto runs = approach3_runs(2);
  std::set<std::string> expected;
  for (const auto& r : runs) {
    if (r.model.params_n < 100'000'000 && r.dataset.size_samples > 10'000'000 &&
        r.dataset.fid < 10.0) {
      expected.insert(r.run_id);
    }
  }
  const auto fit = fit_approach3(runs, single_start3());
  EXPECT_EQ(std::set<std::string>(fit.dropped_runs.begin(), fit.dropped_runs.end()), expected);
  EXPECT_EQ(apply_fit_filter(runs).size(), runs.size() - expected.size());
}

TEST(HuberObjective, ZeroAtTruth) {
  const auto pts = fit_points(approach2_runs(5), true);
  EXPECT_NEAR(huber_logspace_objective(Approach2Params::published(), pts), 0.0, 1e-25);
  const auto pts3 = fit_points(approach3_runs(5), true);
  EXPECT_NEAR(huber_logspace_objective(Approach3Params::published(), pts3), 0.0, 1e-25);
}

TEST(HuberObjective, SingleSmallResidualIsQuadratic) {
  const auto p = Approach2Params::published();
  const double r = 4e-4;
  const double pred = loss_v2(1e8, 1e9, 1.0, p);
  const std::vector<FitPoint> pts = {{1e8, 1e9, 1.0, pred * std::exp(-r)}};
  EXPECT_NEAR(huber_logspace_objective(p, pts), 0.5 * r * r, 1e-15);
}

TEST(HuberObjective, RejectsNonPositiveLoss) {
  const std::vector<FitPoint> pts = {{1e8, 1e9, 1.0, 0.0}};
  EXPECT_THROW(huber_logspace_objective(Approach2Params::published(), pts), DomainError);
}

TEST(ObjectiveGradient, Approach2MatchesFiniteDifferences) {
  const auto pts = prepare_points(fit_points(approach2_runs(8, 0.01, 3), true));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  const auto truth = to_theta(Approach2Params::published());
  for (double ref : {0.0, std::log1p(1.65)}) {
    for (int k = 0; k < 5; ++k) {
      std::vector<double> theta(truth.begin(), truth.end());
      for (auto& t : theta) t += jitter(rng);
      auto f = [&](const std::vector<double>& x, std::vector<double>& g) {
        return objective_v2(x, pts, 1e-3, ref, g);
      };
      EXPECT_LT(gradient_error(f, theta), 1e-5) << "point " << k << " ref " << ref;
    }
  }
}

TEST(ObjectiveGradient, Approach3MatchesFiniteDifferences) {
  const auto pts = prepare_points(fit_points(approach3_runs(6, 0.01, 3), true));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  const auto truth = to_theta(Approach3Params::published());
  for (int k = 0; k < 5; ++k) {
    std::vector<double> theta(truth.begin(), truth.end());
    for (auto& t : theta) t += jitter(rng);
    auto f = [&](const std::vector<double>& x, std::vector<double>& g) {
      return objective_v3(x, pts, 1e-3, g);
    };
    EXPECT_LT(gradient_error(f, theta), 1e-5) << "point " << k;
  }
}

TEST(ObjectiveGradient, QuadraticBranchNearTruth) {
  // Tiny noise keeps most residuals inside the Huber threshold.
  const auto pts = prepare_points(fit_points(approach2_runs(8, 2e-4, 5), true));
  const auto truth = to_theta(Approach2Params::published());
  // Slightly off the optimum so the gradient is not dominated by rounding.
  std::vector<double> theta(truth.begin(), truth.end());
  theta[0] += 2e-3;
  theta[4] -= 1e-4;
  auto f = [&](const std::vector<double>& x, std::vector<double>& g) {
    return objective_v2(x, pts, 1e-3, 0.0, g);
  };
  EXPECT_LT(gradient_error(f, theta), 1e-5);
}

TEST(FitApproach2, RecoversNoiselessTruthFromSmallGrid) {
  const auto fit = fit_approach2(approach2_runs(10), "DG", small_grid2());
  const auto t = Approach2Params::published();
  EXPECT_NEAR(fit.params.alpha, t.alpha, 1e-6);
  EXPECT_NEAR(fit.params.beta, t.beta, 1e-6);
  EXPECT_NEAR(std::log(fit.params.A), std::log(t.A), 1e-5);
  EXPECT_NEAR(std::log(fit.params.B), std::log(t.B), 1e-5);
  EXPECT_NEAR(std::log(fit.params.E), std::log(t.E), 1e-5);
  EXPECT_NEAR(fit.params.epsilon, t.epsilon, 1e-5);
  EXPECT_NEAR(fit.params.zeta, t.zeta, 1e-5);
  ASSERT_EQ(fit.stages.size(), 2u);
  EXPECT_EQ(fit.stages[0].starts.size(), 32u);
  EXPECT_EQ(fit.stages[1].starts.size(), 4u);
  for (const auto& st : fit.stages) EXPECT_LE(st.best().gradient_norm, 1e-10);
}

TEST(FitApproach2, WinnerIsLowestObjectiveThenLowestIndex) {
  const auto fit = fit_approach2(approach2_runs(6, 0.01, 1), "DG", small_grid2());
  for (const auto& st : fit.stages) {
    const auto& w = st.best();
    EXPECT_TRUE(w.usable());
    for (const auto& s : st.starts) {
      if (!s.usable()) continue;
      EXPECT_GE(s.objective, w.objective);
      if (s.objective == w.objective) EXPECT_GE(s.index, w.index);
    }
  }
}

TEST(FitApproach2, DeterministicAcrossThreadCounts) {
  const auto runs = approach2_runs(6, 0.01, 2);
  auto c1 = small_grid2();
  c1.threads = 1;
  auto c4 = small_grid2();
  c4.threads = 4;
  const auto a = fit_approach2(runs, "DG", c1);
  const auto b = fit_approach2(runs, "DG", c4);
  const auto c = fit_approach2(runs, "DG", c4);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(b.params, c.params);
}

TEST(FitApproach2, RepeatedSinglePointIsRejected) {
  auto runs = approach2_runs(1);
  for (auto& r : runs) {
    r.model = runs.front().model;
    r.dataset.size_samples = runs.front().dataset.size_samples;
    r.observations = runs.front().observations;
  }
  try {
    fit_approach2(runs, "DG", small_grid2());
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    EXPECT_NE(e.diagnostics().find("distinct"), std::string::npos);
  }
}

TEST(FitApproach2, NeedsBaseRuns) {
  EXPECT_THROW(fit_approach2(approach2_runs(2), "PFGM++", small_grid2()), UsageError);
}

TEST(FitApproach3, RecoversNoiselessTruthFromOneStart) {
  const auto fit = fit_approach3(approach3_runs(6), single_start3());
  const auto t = Approach3Params::published();
  EXPECT_NEAR(fit.params.alpha, t.alpha, 1e-6);
  EXPECT_NEAR(fit.params.beta, t.beta, 1e-6);
  EXPECT_NEAR(fit.params.kappa, t.kappa, 1e-5);
  EXPECT_NEAR(fit.params.epsilon, t.epsilon, 1e-5);
}

TEST(FitApproach3, ReproducesLowQualityRunsHeldIn) {
  const auto runs = approach3_runs(6, 0.002, 7);
  const auto fit = fit_approach3(runs, single_start3());
  std::vector<FitPoint> edm5;
  for (const auto& r : runs) {
    if (r.dataset.generator != "EDM-5") continue;
    for (const auto& o : r.observations) {
      edm5.push_back({static_cast<double>(r.model.params_n), static_cast<double>(o.samples_seen),
                      r.dataset.fid, o.trades_loss});
    }
  }
  ASSERT_FALSE(edm5.empty());
  for (const auto& p : edm5) {
    const double r = std::log(loss_v3(p.n, p.d, p.fid, fit.params)) - std::log(p.loss);
    EXPECT_LT(std::abs(r), 0.01);
  }
}

TEST(FitConfigGrid, CartesianOrder) {
  auto c = FitConfig::approach2();
  c.init_grid = {{"x", {1, 2}}, {"y", {3, 4, 5}}};
  const auto g = detail::cartesian_grid(c, {"x", "y"});
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(g[0], (std::vector<double>{1, 3}));
  EXPECT_EQ(g[1], (std::vector<double>{1, 4}));
  EXPECT_EQ(g[5], (std::vector<double>{2, 5}));
  EXPECT_THROW(detail::cartesian_grid(c, {"x", "z"}), UsageError);
}

TEST(ParamsRecord, RoundTrips) {
  const AnyParams p2 = Approach2Params::published();
  const AnyParams p3 = Approach3Params::published();
  EXPECT_EQ(std::get<Approach2Params>(params_from_json(params_record(p2))),
            Approach2Params::published());
  EXPECT_EQ(std::get<Approach3Params>(params_from_json(params_record(p3))),
            Approach3Params::published());
  EXPECT_THROW(params_from_json(json{{"form", "approach9"}, {"params", json::object()}}),
               DataError);
}

TEST(ParamsRecord, BundledFilesHoldPublishedConstants) {
  const std::string dir = ADVSCALE_DATA_DIR;
  EXPECT_EQ(std::get<Approach2Params>(load_params(dir + "/approach2_published.json")),
            Approach2Params::published());
  EXPECT_EQ(std::get<Approach3Params>(load_params(dir + "/approach3_published.json")),
            Approach3Params::published());
}

TEST(ParamsRecord, FitRecordCarriesProvenance) {
  const auto fit = fit_approach3(approach3_runs(3), single_start3());
  const auto j = fit_to_json(fit, 42);
  EXPECT_EQ(j.at("seed"), 42);
  EXPECT_EQ(j.at("stages").size(), 1u);
  EXPECT_EQ(j.at("stages")[0].at("starts").size(), 1u);
  EXPECT_EQ(j.at("config").at("huber_delta"), 1e-3);
  EXPECT_EQ(std::get<Approach3Params>(params_from_json(j)), fit.params);
}
