#ifndef ADVSCALE_SYNTHGEN_HPP
#define ADVSCALE_SYNTHGEN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "advscale/error.hpp"
#include "advscale/parametric_fit.hpp"
#include "advscale/run_data.hpp"
#include "advscale/scaling_law.hpp"

namespace advscale {

/// Planted affine loss-to-accuracy relation used to attach adv_acc values.
struct PlantedAccuracy {
  double slope = -0.7496;
  double intercept = 1.2575;
};

struct SynthDesign {
  std::vector<std::int64_t> model_sizes;
  std::vector<std::int64_t> dataset_sizes;
  std::vector<double> fids;
  int eval_points_per_run = 40;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  // First evaluation happens at this fraction of the run's dataset size.
  double first_eval_fraction = 0.01;
  // Noise is multiplicative log-normal unless set.
  bool additive_noise = false;
  std::optional<PlantedAccuracy> planted_accuracy;

  void validate() const {
    if (model_sizes.empty() || dataset_sizes.empty() || fids.empty()) {
      throw UsageError("synth design needs non-empty model sizes, dataset sizes and fids");
    }
    if (!(noise_sigma >= 0.0)) throw UsageError("noise_sigma must be >= 0");
    if (eval_points_per_run < 1) throw UsageError("eval_points_per_run must be >= 1");
    if (!(first_eval_fraction > 0.0 && first_eval_fraction <= 1.0)) {
      throw UsageError("first_eval_fraction must lie in (0, 1]");
    }
    for (auto n : model_sizes) {
      if (n <= 0) throw UsageError("model sizes must be positive");
    }
    for (auto d : dataset_sizes) {
      if (d <= 0) throw UsageError("dataset sizes must be positive");
    }
    for (double f : fids) {
      if (!(f >= 0.0)) throw UsageError("fids must be >= 0");
    }
  }
};

/// Catalog design: the eight catalog models, each trained on
/// every catalog size of one generator.
inline SynthDesign catalog_design(const DatasetSpec& generator) {
  SynthDesign d;
  for (const auto& m : model_catalog()) d.model_sizes.push_back(m.params_n);
  d.dataset_sizes = catalog_training_sizes(generator);
  d.fids = {generator.fid};
  return d;
}

inline double predicted_loss(const AnyParams& truth, double n, double d, double fid) {
  return std::visit(
      [&](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, Approach2Params>) {
          return loss_v2(n, d, fid, p);
        } else {
          return loss_v3(n, d, fid, p);
        }
      },
      truth);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline ModelSpec model_for(std::int64_t n) {
  for (const auto& m : model_catalog()) {
    if (m.params_n == n) return m;
  }
  return ModelSpec{"N" + std::to_string(n), 1, 1, n};
}

inline std::string generator_for(double fid) {
  for (const auto& d : dataset_catalog()) {
    if (d.fid == fid) return d.generator;
  }
  return "FID-" + format_g(fid);
}

// Hyperparameters by dataset size, following the reference training recipe.
inline std::map<std::string, double> recipe_hyper(std::int64_t d) {
  const bool small = d <= 10'000'000;
  return {{"batch_size", small ? 1024.0 : 2048.0},
          {"learning_rate", small ? 0.3 : (d <= 200'000'000 ? 0.2 : 0.1)},
          {"trades_beta", 5.0},
          {"weight_average_decay", 0.995}};
}

}  // namespace detail

/// One synthetic learning curve: `points` log-spaced evaluations of the truth
/// at sample counts from d_first to d_last.
inline RunRecord synth_run(const AnyParams& truth, std::int64_t n, double fid,
                           std::int64_t d_first, std::int64_t d_last, int points,
                           double noise_sigma, std::uint64_t seed, bool additive_noise = false,
                           std::optional<PlantedAccuracy> planted = std::nullopt) {
  if (n <= 0 || d_first <= 0 || d_last < d_first || points < 1) {
    throw UsageError("synth_run: invalid sizes");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  RunRecord run;
  run.model = detail::model_for(n);
  run.dataset = DatasetSpec{detail::generator_for(fid), fid, d_last};
  run.run_id = "synth-" + run.dataset.generator + "-n" + std::to_string(n) + "-d" +
               std::to_string(d_last);
  run.hyper = detail::recipe_hyper(d_last);

  const double lo = std::log(static_cast<double>(d_first));
  const double hi = std::log(static_cast<double>(d_last));
  std::int64_t prev = 0;
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 1.0 : static_cast<double>(i) / (points - 1);
    auto d = static_cast<std::int64_t>(std::llround(std::exp(lo + t * (hi - lo))));
    if (i == points - 1) d = d_last;
    if (d <= prev) continue;
    prev = d;
    const double clean = predicted_loss(truth, static_cast<double>(n), static_cast<double>(d), fid);
    double loss = clean;
    if (noise_sigma > 0.0) {
      const double eta = noise_sigma * normal(rng);
      loss = additive_noise ? clean + eta : clean * std::exp(eta);
    }
    Observation obs;
    obs.samples_seen = d;
    obs.train_flops = kFlopsPerParamSample * static_cast<double>(n) * static_cast<double>(d);
    obs.trades_loss = loss;
    if (planted) {
      obs.adv_acc = std::clamp(planted->intercept + planted->slope * loss, 0.0, 1.0);
    }
    run.observations.push_back(obs);
  }
  return run;
}

/// Runs for every (model size, FID, dataset size) of the design, in that
/// nesting order. Each run draws noise from its own stream derived from the
/// design seed and the run's position.
inline std::vector<RunRecord> generate_runs(const AnyParams& truth, const SynthDesign& design) {
  design.validate();
  std::vector<RunRecord> runs;
  std::uint64_t k = 0;
  for (auto n : design.model_sizes) {
    for (double fid : design.fids) {
      for (auto d_max : design.dataset_sizes) {
        const auto d_first = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(design.first_eval_fraction *
                                                      static_cast<double>(d_max))));
        runs.push_back(synth_run(truth, n, fid, d_first, d_max, design.eval_points_per_run,
                                 design.noise_sigma, detail::splitmix64(design.seed + detail::splitmix64(k)),
                                 design.additive_noise, design.planted_accuracy));
        ++k;
      }
    }
  }
  return runs;
}

}  // namespace advscale

#endif  // ADVSCALE_SYNTHGEN_HPP
