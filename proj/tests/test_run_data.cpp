#include <gtest/gtest.h>

#include <sstream>

#include "advscale/run_data.hpp"

using namespace advscale;

namespace {

RunRecord two_point_run() {
  RunRecord r;
  r.run_id = "r1";
  r.model = {"WRN-28-4", 28, 4, 6'000'000};
  r.dataset = {"DG", 1.65, 5'000'000};
  r.observations = {{1'000'000, training_flops(6e6, 1e6), 1.1, 0.4, std::nullopt},
                    {5'000'000, training_flops(6e6, 5e6), 0.95, 0.5, 0.8}};
  return r;
}

std::string fixture(const char* name) { return std::string(ADVSCALE_DATA_DIR) + "/" + name; }

}  // namespace

TEST(TrainingFlops, UnitInputs) { EXPECT_DOUBLE_EQ(training_flops(1, 1), 7822.0); }

TEST(TrainingFlops, SmallestCatalogRun) {
  EXPECT_DOUBLE_EQ(training_flops(6e6, 5e6), 2.3466e17);
}

TEST(TrainingFlops, LinearInN) {
  for (double k : {0.5, 2.0, 3.0, 1e3}) {
    EXPECT_EQ(training_flops(k * 2e7, 3e8), k * training_flops(2e7, 3e8));
  }
}

TEST(TrainingFlops, RejectsNonPositive) {
  EXPECT_THROW(training_flops(0, 1), DomainError);
  EXPECT_THROW(training_flops(1, -1), DomainError);
}

TEST(IterationCost, TenStepAttack) {
  EXPECT_EQ(adversarial_iteration_cost(10), 27);
  EXPECT_DOUBLE_EQ(CostModel{}.adversarial_multiplier(10), 9.0);
}

TEST(IterationCost, OneStepAttack) {
  EXPECT_EQ(adversarial_iteration_cost(1), 9);
  EXPECT_DOUBLE_EQ(CostModel{}.adversarial_multiplier(1), 3.0);
}

TEST(IterationCost, AffineSlopeTwoInterceptSeven) {
  for (int s = 1; s < 50; ++s) EXPECT_EQ(adversarial_iteration_cost(s), 2 * s + 7);
}

TEST(IterationCost, ZeroStepsRejected) {
  EXPECT_THROW(adversarial_iteration_cost(0), DomainError);
  EXPECT_THROW(adversarial_iteration_cost(-3), DomainError);
}

TEST(DatasetSpec, PerfectGeneratorHasInfiniteQuality) {
  DatasetSpec d{"ideal", 0.0, 1};
  EXPECT_TRUE(d.quality_is_infinite());
  EXPECT_TRUE(std::isinf(d.quality()));
  EXPECT_DOUBLE_EQ((DatasetSpec{"DG", 2.0, 1}.quality()), 0.5);
}

TEST(LoadRuns, SingleRecord) {
  std::stringstream ss;
  write_runs(ss, {two_point_run()});
  const auto runs = read_runs(ss);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0], two_point_run());
}

TEST(LoadRuns, NonIncreasingFlopsNamesRun) {
  auto r = two_point_run();
  r.observations[1].train_flops = r.observations[0].train_flops;
  std::stringstream ss;
  write_runs(ss, {r});
  try {
    read_runs(ss);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'r1'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("train_flops"), std::string::npos);
  }
}

TEST(LoadRuns, NonIncreasingSamplesRejected) {
  auto r = two_point_run();
  r.observations[1].samples_seen = r.observations[0].samples_seen;
  EXPECT_THROW(validate(r), DataError);
}

TEST(LoadRuns, SamplesMayOvershootByOneBatch) {
  auto r = two_point_run();
  r.observations[1].samples_seen = 5'000'500;
  EXPECT_THROW(validate(r), DataError);
  r.hyper["batch_size"] = 1024;
  EXPECT_NO_THROW(validate(r));
}

TEST(LoadRuns, MalformedLineReportsLineNumber) {
  std::stringstream ss;
  write_runs(ss, {two_point_run()});
  ss << "{\"run_id\": \"x\"}\n";
  try {
    read_runs(ss);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadRuns, MissingFileIsUsageError) {
  EXPECT_THROW(load_runs("/nonexistent/runs.jsonl"), UsageError);
}

TEST(LoadRuns, FortyRunFixture) {
  const auto runs = load_runs(fixture("runs_dg_synth.jsonl"));
  ASSERT_EQ(runs.size(), 40u);
  std::set<std::int64_t> models, sizes;
  for (const auto& r : runs) {
    EXPECT_EQ(r.dataset.generator, "DG");
    models.insert(r.model.params_n);
    sizes.insert(r.dataset.size_samples);
  }
  EXPECT_EQ(models.size(), 8u);
  EXPECT_EQ(sizes.size(), 5u);
}

TEST(LoadRuns, FixtureFlopsWithinOnePercent) {
  const CostModel cost;
  for (const auto& r : load_runs(fixture("runs_dg_synth.jsonl"))) {
    EXPECT_TRUE(cost.validate_against(r)) << r.run_id;
  }
}

TEST(CostModel, FlagsRunOffTheFlopsModel) {
  auto r = two_point_run();
  r.observations[1].train_flops *= 1.05;
  EXPECT_FALSE(CostModel{}.validate_against(r));
  EXPECT_NEAR(CostModel{}.max_relative_flops_error(r), 0.05 / 1.05, 1e-12);
}

TEST(LoadRuns, RoundTripIsByteIdentical) {
  std::ifstream in(fixture("runs_dg_synth.jsonl"));
  std::stringstream original;
  original << in.rdbuf();
  std::stringstream copy(original.str());
  std::stringstream out;
  write_runs(out, read_runs(copy));
  EXPECT_EQ(out.str(), original.str());
}

TEST(Catalog, RoundTripsBitExactly) {
  std::stringstream ms, ds;
  write_model_catalog(ms, model_catalog());
  write_dataset_catalog(ds, dataset_catalog());
  EXPECT_EQ(read_model_catalog(ms), model_catalog());
  EXPECT_EQ(read_dataset_catalog(ds), dataset_catalog());
}

TEST(Catalog, BundledFilesMatch) {
  std::ifstream ms(fixture("models.jsonl")), ds(fixture("datasets.jsonl"));
  EXPECT_EQ(read_model_catalog(ms), model_catalog());
  EXPECT_EQ(read_dataset_catalog(ds), dataset_catalog());
}

TEST(Catalog, TrainingSizesFollowGeneratorCapacity) {
  EXPECT_EQ(catalog_training_sizes(*find_dataset("DG")).size(), 5u);
  EXPECT_EQ(catalog_training_sizes(*find_dataset("EDM-5")).size(), 3u);
  EXPECT_FALSE(find_dataset("nope").has_value());
}
