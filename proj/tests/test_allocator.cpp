#include <gtest/gtest.h>

#include <cmath>

#include "advscale/allocator.hpp"
#include "advscale/synthgen.hpp"

using namespace advscale;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(AllocationV2, PublishedPerfectQuality) {
  const auto a = optimal_allocation_v2(1e25, 0.0, Approach2Params::published());
  EXPECT_NEAR(a.a, 0.23 / 0.47, 1e-15);
  EXPECT_NEAR(a.b, 0.24 / 0.47, 1e-15);
  EXPECT_NEAR(a.l_star, 0.5342171264843427, 1e-9);
  EXPECT_NEAR(a.n_star, 10160502382.083027, 1e-6 * a.n_star);
}

TEST(AllocationV2, PublishedPfgmQuality) {
  const auto p = Approach2Params::published();
  const auto a = optimal_allocation_v2(1e25, 1.76, p);
  EXPECT_NEAR(a.l_star, 0.6115512559318859, 1e-9);
  EXPECT_NEAR(p.effective_E(1.76), 0.5647, 1e-4);
}

TEST(AllocationV2, ConstraintAndFirstOrderCondition) {
  const auto p = Approach2Params::published();
  for (double f = 1e15; f < 1e30; f *= 13.7) {
    for (double fid : {0.0, 1.65, 6.79, 35.54}) {
      const auto a = optimal_allocation_v2(f, fid, p);
      EXPECT_LT(rel(kFlopsPerParamSample * a.n_star * a.d_star, f), 1e-12);
      const double lhs = p.alpha * p.A * std::pow(a.n_star, -p.alpha);
      const double rhs = p.beta * p.effective_B(fid) * std::pow(a.d_star, -p.beta);
      EXPECT_LT(rel(lhs, rhs), 1e-9);
    }
  }
}

TEST(AllocationV2, ScalesAsPowerLaw) {
  const auto p = Approach2Params::published();
  const auto base = optimal_allocation_v2(1e22, 1.76, p);
  for (double k : {2.0, 10.0, 1e3}) {
    const auto s = optimal_allocation_v2(1e22 * k, 1.76, p);
    EXPECT_LT(rel(s.n_star, base.n_star * std::pow(k, base.a)), 1e-12);
    EXPECT_LT(rel(s.d_star, base.d_star * std::pow(k, base.b)), 1e-12);
  }
}

TEST(AllocationV2, IsTheConstrainedMinimum) {
  const auto p = Approach2Params::published();
  const auto a = optimal_allocation_v2(1e24, 0.0, p);
  for (double w : {0.9, 0.99, 1.01, 1.1}) {
    EXPECT_GT(loss_v2(a.n_star * w, a.d_star / w, 0.0, p), a.l_star);
  }
}

TEST(AllocationV2, DegenerateExponents) {
  Approach2Params p = Approach2Params::published();
  p.alpha = 0.0;
  p.beta = 0.0;
  EXPECT_THROW(optimal_allocation_v2(1e20, 0.0, p), DomainError);
  EXPECT_THROW(optimal_allocation_v2(-1.0, 0.0, Approach2Params::published()), DomainError);
}

TEST(AllocationV3, PublishedConstants) {
  const auto p = Approach3Params::published();
  const auto a0 = optimal_allocation_v3(1e25, 0.0, p);
  EXPECT_NEAR(a0.l_star, 0.5691415685771141, 1e-7);
  EXPECT_LT(rel(a0.n_star, 10698488984.572798), 1e-4);
  const auto a1 = optimal_allocation_v3(1e25, 1.76, p);
  EXPECT_NEAR(a1.l_star, 0.6463412442388052, 1e-7);
  EXPECT_TRUE(a1.local_exponents);
  EXPECT_FALSE(a1.boundary_warning);
}

TEST(AllocationV3, ConstraintAndLocalMinimum) {
  const auto p = Approach3Params::published();
  for (double f : {1e18, 1e21, 1e24, 1e26}) {
    for (double fid : {0.0, 1.76, 35.54}) {
      const auto a = optimal_allocation_v3(f, fid, p);
      EXPECT_LT(rel(kFlopsPerParamSample * a.n_star * a.d_star, f), 1e-6);
      if (a.boundary_warning) continue;
      for (double w : {0.99, 1.01}) {
        EXPECT_GT(loss_v3(a.n_star * w, a.d_star / w, fid, p), a.l_star) << f << " " << fid;
      }
    }
  }
}

TEST(AllocationV3, MatchesClosedFormWithoutBottleneck) {
  const auto p2 = Approach2Params::published();
  const Approach3Params p3{p2.A, std::pow(p2.B, 1.0 / p2.beta), p2.E, 0.007, p2.alpha, p2.beta,
                           0.6, 0.04};
  for (double f : {1e19, 1e22, 1e25}) {
    const auto v2 = optimal_allocation_v2(f, 0.0, p2);
    const auto v3 = optimal_allocation_v3(f, 0.0, p3);
    EXPECT_LT(rel(v3.n_star, v2.n_star), 1e-3);
    EXPECT_NEAR(v3.a, v2.a, 1e-4);
    EXPECT_NEAR(v3.b, v2.b, 1e-4);
  }
}

TEST(AllocationV3, FlagsSearchBoundary) {
  NumericAllocationOptions opt;
  opt.n_max = 1e7;
  const auto a = optimal_allocation_v3(1e25, 0.0, Approach3Params::published(), opt);
  EXPECT_TRUE(a.boundary_warning);
}

TEST(Overhead, IdentityAndHalfModel) {
  const auto p = Approach2Params::published();
  const std::vector<double> w = {1.0, 0.5};
  const auto pts = overhead_curve(1e25, 0.0, p, w);
  EXPECT_DOUBLE_EQ(pts[0].omega_d, 1.0);
  EXPECT_DOUBLE_EQ(pts[0].overhead_pct, 0.0);
  EXPECT_NEAR(pts[1].omega_d, 2.289298400680179, 1e-9);
  EXPECT_NEAR(pts[1].overhead_pct, 14.464920034008944, 1e-7);
}

TEST(Overhead, IndependentOfBudget) {
  // The optimum's term ratio is beta/alpha at every budget.
  const auto p = Approach2Params::published();
  const std::vector<double> w = {0.5};
  for (double f : {1e18, 1e22, 1e28}) {
    EXPECT_NEAR(overhead_curve(f, 1.76, p, w)[0].overhead_pct, 14.464920034008944, 1e-7);
  }
}

TEST(Overhead, LossInvariantAlongCurve) {
  const auto p = Approach2Params::published();
  std::vector<double> w;
  for (double x = 0.1; x <= 4.0; x += 0.05) w.push_back(x);
  for (double fid : {0.0, 1.76}) {
    const auto opt = optimal_allocation_v2(1e25, fid, p);
    const auto pts = overhead_curve(1e25, fid, p, w);
    double prev_wd = std::numeric_limits<double>::infinity();
    for (const auto& pt : pts) {
      const double l = loss_v2(opt.n_star * pt.omega_n, opt.d_star * pt.omega_d, fid, p);
      EXPECT_LT(rel(l, opt.l_star), 1e-9) << pt.omega_n;
      EXPECT_LT(pt.omega_d, prev_wd);
      prev_wd = pt.omega_d;
      if (std::abs(pt.omega_n - 1.0) > 1e-9) EXPECT_GT(pt.overhead_pct, 0.0);
    }
  }
}

TEST(Overhead, InfeasibleShrink) {
  const std::vector<double> w = {0.01};
  EXPECT_THROW(overhead_curve(1e25, 0.0, Approach2Params::published(), w), InfeasibleError);
}

TEST(LossAccuracy, RecoversPlantedLine) {
  auto design = catalog_design(*find_dataset("DG"));
  design.eval_points_per_run = 5;
  design.noise_sigma = 0.01;
  design.planted_accuracy = PlantedAccuracy{};
  const auto m = fit_loss_accuracy(generate_runs(Approach2Params::published(), design));
  EXPECT_NEAR(m.slope, -0.7496, 1e-9);
  EXPECT_NEAR(m.intercept, 1.2575, 1e-9);
  EXPECT_NEAR(m.r_squared, 1.0, 1e-12);
}

TEST(LossAccuracy, UsesBestEvaluatedObservation) {
  RunRecord r;
  r.run_id = "r";
  r.observations = {{1, 1, 0.9, 0.5, std::nullopt}, {2, 2, 0.7, 0.7, std::nullopt},
                    {3, 3, 0.8, std::nullopt, std::nullopt}};
  auto r2 = r, r3 = r;
  r2.observations[1] = {2, 2, 0.6, 0.75, std::nullopt};
  r3.observations[1] = {2, 2, 0.5, 0.8, std::nullopt};
  const auto m = fit_loss_accuracy({r, r2, r3});
  EXPECT_NEAR(m.slope, -0.5, 1e-12);
  EXPECT_NEAR(m.intercept, 1.05, 1e-12);
}

TEST(LossAccuracy, NeedsThreeRuns) {
  RunRecord r;
  r.observations = {{1, 1, 0.9, 0.5, std::nullopt}};
  EXPECT_THROW(fit_loss_accuracy({r, r}), UsageError);
}

TEST(Frontier, AsymptoteIsMapOfIrreducibleLoss) {
  const AnyParams p = Approach2Params::published();
  const auto map = LossAccuracyMap::published();
  const std::vector<double> fids = {0.0, 1.76};
  const std::vector<double> flops = {1e20, 1e25};
  const auto t = frontier(p, map, fids, flops);
  ASSERT_EQ(t.asymptotes.size(), 2u);
  EXPECT_NEAR(t.asymptotes[0].accuracy, 0.897692, 1e-12);
  EXPECT_NEAR(t.asymptotes[1].loss, Approach2Params::published().effective_E(1.76), 1e-15);
}

TEST(Frontier, AccuracyRisesWithComputeAndQuality) {
  const auto map = LossAccuracyMap::published();
  std::vector<double> flops;
  for (double f = 1e16; f <= 1e28; f *= 10) flops.push_back(f);
  const std::vector<double> fids = {0.0, 1.65, 1.76, 2.48, 6.79, 35.54};
  for (const AnyParams& p : {AnyParams{Approach2Params::published()},
                             AnyParams{Approach3Params::published()}}) {
    const auto t = frontier(p, map, fids, flops);
    ASSERT_EQ(t.rows.size(), fids.size() * flops.size());
    for (std::size_t k = 0; k < fids.size(); ++k) {
      for (std::size_t i = 1; i < flops.size(); ++i) {
        const auto& prev = t.rows[k * flops.size() + i - 1];
        const auto& cur = t.rows[k * flops.size() + i];
        EXPECT_GE(cur.accuracy, prev.accuracy);
        if (k > 0) EXPECT_LT(t.rows[(k - 1) * flops.size() + i].l_star, cur.l_star);
      }
    }
  }
}

TEST(Frontier, RejectsUnsortedGrid) {
  const std::vector<double> fids = {0.0};
  const std::vector<double> flops = {1e20, 1e19};
  EXPECT_THROW(frontier(Approach2Params::published(), LossAccuracyMap::published(), fids, flops),
               UsageError);
}
