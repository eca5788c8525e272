#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "advscale/synthgen.hpp"

using namespace advscale;

namespace {

std::string serialize(const std::vector<RunRecord>& runs) {
  std::stringstream ss;
  write_runs(ss, runs);
  return ss.str();
}

}  // namespace

TEST(Synthgen, NoiselessMatchesClosedForm) {
  for (const AnyParams& truth : {AnyParams{Approach2Params::published()},
                                 AnyParams{Approach3Params::published()}}) {
    auto d = catalog_design(*find_dataset("EDM-7"));
    d.eval_points_per_run = 7;
    for (const auto& r : generate_runs(truth, d)) {
      for (const auto& o : r.observations) {
        EXPECT_EQ(o.trades_loss, predicted_loss(truth, static_cast<double>(r.model.params_n),
                                                static_cast<double>(o.samples_seen), r.dataset.fid));
      }
    }
  }
}

TEST(Synthgen, CatalogDesignShape) {
  const auto runs = generate_runs(Approach2Params::published(), catalog_design(*find_dataset("DG")));
  ASSERT_EQ(runs.size(), 40u);
  for (const auto& r : runs) {
    EXPECT_EQ(r.observations.size(), 40u);
    EXPECT_EQ(r.observations.back().samples_seen, r.dataset.size_samples);
    EXPECT_NO_THROW(validate(r));
    EXPECT_TRUE(CostModel{}.validate_against(r));
  }
}

TEST(Synthgen, SeedDeterminism) {
  auto d = catalog_design(*find_dataset("PFGM++"));
  d.noise_sigma = 0.01;
  d.seed = 17;
  const auto a = serialize(generate_runs(Approach2Params::published(), d));
  const auto b = serialize(generate_runs(Approach2Params::published(), d));
  EXPECT_EQ(a, b);
  d.seed = 18;
  EXPECT_NE(a, serialize(generate_runs(Approach2Params::published(), d)));
}

TEST(Synthgen, LogNoiseIsUnbiased) {
  auto d = catalog_design(*find_dataset("DG"));
  d.noise_sigma = 0.05;
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    d.seed = seed;
    for (const auto& r : generate_runs(Approach2Params::published(), d)) {
      for (const auto& o : r.observations) {
        const double clean = loss_v2(static_cast<double>(r.model.params_n),
                                     static_cast<double>(o.samples_seen), r.dataset.fid,
                                     Approach2Params::published());
        const double e = std::log(o.trades_loss / clean);
        sum += e;
        sq += e * e;
        ++n;
      }
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 4.0 * 0.05 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sd, 0.05, 0.002);
}

TEST(Synthgen, PlantedAccuracyFollowsLoss) {
  auto d = catalog_design(*find_dataset("DG"));
  d.eval_points_per_run = 3;
  d.noise_sigma = 0.01;
  d.planted_accuracy = PlantedAccuracy{};
  for (const auto& r : generate_runs(Approach2Params::published(), d)) {
    for (const auto& o : r.observations) {
      ASSERT_TRUE(o.adv_acc.has_value());
      EXPECT_NEAR(*o.adv_acc, 1.2575 - 0.7496 * o.trades_loss, 1e-15);
    }
  }
}

TEST(Synthgen, DesignValidation) {
  SynthDesign d;
  EXPECT_THROW(generate_runs(Approach2Params::published(), d), UsageError);
  d = catalog_design(*find_dataset("DG"));
  d.noise_sigma = -1;
  EXPECT_THROW(generate_runs(Approach2Params::published(), d), UsageError);
}
