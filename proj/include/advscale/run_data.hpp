#ifndef ADVSCALE_RUN_DATA_HPP
#define ADVSCALE_RUN_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "advscale/error.hpp"

namespace advscale {

using json = nlohmann::json;

/// Default coefficient of the adversarial-training compute constraint
/// FLOPs ~= 7822 * N * D.
inline constexpr double kFlopsPerParamSample = 7822.0;

struct ModelSpec {
  std::string name;
  std::int64_t depth = 0;
  std::int64_t width = 0;
  std::int64_t params_n = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// A synthetic training dataset. Quality is 1/FID; an FID of zero stands for
/// a hypothetical perfect generator and has infinite quality.
struct DatasetSpec {
  std::string generator;
  double fid = 0.0;
  std::int64_t size_samples = 0;

  double quality() const noexcept {
    return fid > 0.0 ? 1.0 / fid : std::numeric_limits<double>::infinity();
  }
  bool quality_is_infinite() const noexcept { return fid == 0.0; }

  bool operator==(const DatasetSpec&) const = default;
};

struct Observation {
  std::int64_t samples_seen = 0;
  double train_flops = 0.0;
  double trades_loss = 0.0;
  std::optional<double> adv_acc;
  std::optional<double> clean_acc;

  bool operator==(const Observation&) const = default;
};

struct RunRecord {
  std::string run_id;
  ModelSpec model;
  DatasetSpec dataset;
  std::map<std::string, double> hyper;
  std::vector<Observation> observations;

  const Observation& final_observation() const { return observations.back(); }

  bool operator==(const RunRecord&) const = default;
};

/// FLOPs accounting for adversarial training.
struct CostModel {
  double nd_coefficient = kFlopsPerParamSample;
  int forward_equivalents_standard = 3;

  /// Forward-pass equivalents of one adversarial training iteration with
  /// `pgd_steps` attack steps: one clean forward for the attack logits, a
  /// forward plus an image-only backward per step, two forwards for the
  /// TRADES loss and one backward over the effectively doubled batch.
  static int adversarial_iteration_cost(int pgd_steps) {
    if (pgd_steps < 1) {
      throw DomainError("pgd_steps must be >= 1, got " + std::to_string(pgd_steps));
    }
    return 1 + 2 * pgd_steps + 2 + 4;
  }

  double adversarial_multiplier(int pgd_steps) const {
    return static_cast<double>(adversarial_iteration_cost(pgd_steps)) /
           forward_equivalents_standard;
  }

  double training_flops(double n, double d) const {
    if (!(n > 0.0) || !(d > 0.0)) {
      throw DomainError("training_flops requires n > 0 and d > 0");
    }
    return nd_coefficient * n * d;
  }

  /// Largest relative error between nd_coefficient*N*D and the recorded
  /// train_flops over the observations of `run`.
  double max_relative_flops_error(const RunRecord& run) const {
    double worst = 0.0;
    const auto n = static_cast<double>(run.model.params_n);
    for (const auto& obs : run.observations) {
      const double predicted = training_flops(n, static_cast<double>(obs.samples_seen));
      worst = std::max(worst, std::abs(predicted - obs.train_flops) / obs.train_flops);
    }
    return worst;
  }

  bool validate_against(const RunRecord& run, double tolerance = 0.01) const {
    return max_relative_flops_error(run) < tolerance;
  }
};

inline int adversarial_iteration_cost(int pgd_steps) {
  return CostModel::adversarial_iteration_cost(pgd_steps);
}

inline double training_flops(double n, double d) { return CostModel{}.training_flops(n, d); }

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void require(bool ok, const std::string& run_id, const std::string& field,
                    const std::string& what) {
  if (!ok) throw DataError("run '" + run_id + "': field '" + field + "' " + what);
}

}  // namespace detail

/// Samples a run may overshoot its dataset by: one batch, taken from the
/// largest batch-size hyperparameter recorded for the run.
inline std::int64_t sample_slack(const RunRecord& run) {
  for (const char* key : {"batch_size", "max_batch_size"}) {
    if (auto it = run.hyper.find(key); it != run.hyper.end()) {
      return static_cast<std::int64_t>(it->second);
    }
  }
  return 0;
}

inline void validate(const RunRecord& run) {
  using detail::require;
  const auto& id = run.run_id;
  require(!id.empty(), "<unnamed>", "run_id", "is empty");
  require(run.model.params_n > 0, id, "model.params_n", "must be positive");
  require(run.model.depth > 0, id, "model.depth", "must be positive");
  require(run.model.width > 0, id, "model.width", "must be positive");
  require(std::isfinite(run.dataset.fid) && run.dataset.fid >= 0.0, id, "dataset.fid",
          "must be a finite non-negative number");
  require(run.dataset.size_samples > 0, id, "dataset.size_samples", "must be positive");
  require(!run.observations.empty(), id, "observations", "must be non-empty");

  for (std::size_t i = 0; i < run.observations.size(); ++i) {
    const auto& obs = run.observations[i];
    const std::string at = "observations[" + std::to_string(i) + "].";
    require(obs.samples_seen > 0, id, at + "samples_seen", "must be positive");
    require(std::isfinite(obs.train_flops) && obs.train_flops > 0.0, id, at + "train_flops",
            "must be positive");
    require(std::isfinite(obs.trades_loss) && obs.trades_loss > 0.0, id, at + "trades_loss",
            "must be positive");
    if (obs.adv_acc) {
      require(*obs.adv_acc >= 0.0 && *obs.adv_acc <= 1.0, id, at + "adv_acc", "must lie in [0,1]");
    }
    if (obs.clean_acc) {
      require(*obs.clean_acc >= 0.0 && *obs.clean_acc <= 1.0, id, at + "clean_acc",
              "must lie in [0,1]");
    }
    if (i > 0) {
      const auto& prev = run.observations[i - 1];
      require(obs.samples_seen > prev.samples_seen, id, at + "samples_seen",
              "is not strictly increasing");
      require(obs.train_flops > prev.train_flops, id, at + "train_flops",
              "is not strictly increasing");
    }
  }
  require(run.observations.back().samples_seen <= run.dataset.size_samples + sample_slack(run),
          id, "observations.samples_seen", "exceeds dataset.size_samples plus one batch");
}

// ---------------------------------------------------------------------------
// JSON Lines encoding

inline json to_json(const ModelSpec& m) {
  return json{{"name", m.name}, {"depth", m.depth}, {"width", m.width}, {"params_n", m.params_n}};
}

inline json to_json(const DatasetSpec& d) {
  return json{{"generator", d.generator}, {"fid", d.fid}, {"size_samples", d.size_samples}};
}

inline json to_json(const Observation& o) {
  json j{{"samples_seen", o.samples_seen},
         {"train_flops", o.train_flops},
         {"trades_loss", o.trades_loss}};
  if (o.adv_acc) j["adv_acc"] = *o.adv_acc;
  if (o.clean_acc) j["clean_acc"] = *o.clean_acc;
  return j;
}

inline json to_json(const RunRecord& r) {
  json obs = json::array();
  for (const auto& o : r.observations) obs.push_back(to_json(o));
  json hyper = json::object();
  for (const auto& [k, v] : r.hyper) hyper[k] = v;
  return json{{"run_id", r.run_id},
              {"model", to_json(r.model)},
              {"dataset", to_json(r.dataset)},
              {"hyper", hyper},
              {"observations", obs}};
}

namespace detail {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace detail

inline ModelSpec model_from_json(const json& j) {
  return ModelSpec{detail::field<std::string>(j, "name"), detail::field<std::int64_t>(j, "depth"),
                   detail::field<std::int64_t>(j, "width"),
                   detail::field<std::int64_t>(j, "params_n")};
}

inline DatasetSpec dataset_from_json(const json& j) {
  return DatasetSpec{detail::field<std::string>(j, "generator"), detail::field<double>(j, "fid"),
                     detail::field<std::int64_t>(j, "size_samples")};
}

inline Observation observation_from_json(const json& j) {
  Observation o;
  o.samples_seen = detail::field<std::int64_t>(j, "samples_seen");
  o.train_flops = detail::field<double>(j, "train_flops");
  o.trades_loss = detail::field<double>(j, "trades_loss");
  o.adv_acc = detail::optional_field<double>(j, "adv_acc");
  o.clean_acc = detail::optional_field<double>(j, "clean_acc");
  return o;
}

inline RunRecord run_from_json(const json& j) {
  RunRecord r;
  r.run_id = detail::field<std::string>(j, "run_id");
  r.model = model_from_json(j.at("model"));
  r.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("hyper")) {
    for (const auto& [k, v] : j.at("hyper").items()) r.hyper[k] = v.get<double>();
  }
  for (const auto& o : detail::field<json>(j, "observations")) {
    r.observations.push_back(observation_from_json(o));
  }
  return r;
}

/// Visits every non-blank line of a JSON Lines stream. Malformed JSON or a
/// throwing visitor surfaces as ParseError carrying the 1-based line number;
/// DataError from the visitor passes through unchanged.
template <typename Visitor>
void for_each_json_line(std::istream& in, Visitor&& visit) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    try {
      visit(j, lineno);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
}

inline std::vector<RunRecord> read_runs(std::istream& in) {
  std::vector<RunRecord> runs;
  for_each_json_line(in, [&](const json& j, std::size_t) {
    RunRecord r = run_from_json(j);
    validate(r);
    runs.push_back(std::move(r));
  });
  return runs;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return in;
}

/// Loads a run-record file (one JSON object per line), validating each record.
inline std::vector<RunRecord> load_runs(const std::string& path) {
  auto in = open_input(path);
  return read_runs(in);
}

inline void write_runs(std::ostream& out, const std::vector<RunRecord>& runs) {
  for (const auto& r : runs) out << to_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Model and generator catalogs.

inline std::vector<ModelSpec> model_catalog() {
  return {
      {"WRN-28-4", 28, 4, 6'000'000},     {"WRN-40-4", 40, 4, 9'000'000},
      {"WRN-82-4", 82, 4, 20'000'000},    {"WRN-28-12", 28, 12, 53'000'000},
      {"WRN-58-12", 58, 12, 122'000'000}, {"WRN-82-12", 82, 12, 178'000'000},
      {"WRN-70-16", 70, 16, 267'000'000}, {"WRN-82-16", 82, 16, 316'000'000},
  };
}

inline std::vector<DatasetSpec> dataset_catalog() {
  return {
      {"EDM-5", 35.54, 30'000'000},  {"EDM-6", 14.26, 30'000'000},
      {"EDM-7", 6.79, 100'000'000},  {"EDM-10", 2.48, 30'000'000},
      {"EDM-20", 1.82, 100'000'000}, {"PFGM++", 1.76, 100'000'000},
      {"DG", 1.65, 100'000'000},
  };
}

inline std::optional<DatasetSpec> find_dataset(const std::string& generator) {
  for (auto& d : dataset_catalog()) {
    if (d.generator == generator) return d;
  }
  return std::nullopt;
}

/// Training-set sizes used per generator: five for 100M-sample generators,
/// three for the 30M ones.
inline std::vector<std::int64_t> catalog_training_sizes(const DatasetSpec& d) {
  if (d.size_samples >= 100'000'000) {
    return {5'000'000, 10'000'000, 30'000'000, 70'000'000, 100'000'000};
  }
  return {5'000'000, 10'000'000, 30'000'000};
}

inline void write_model_catalog(std::ostream& out, const std::vector<ModelSpec>& models) {
  for (const auto& m : models) out << to_json(m).dump() << '\n';
}

inline void write_dataset_catalog(std::ostream& out, const std::vector<DatasetSpec>& sets) {
  for (const auto& d : sets) out << to_json(d).dump() << '\n';
}

inline std::vector<ModelSpec> read_model_catalog(std::istream& in) {
  std::vector<ModelSpec> out;
  for_each_json_line(in, [&](const json& j, std::size_t) { out.push_back(model_from_json(j)); });
  return out;
}

inline std::vector<DatasetSpec> read_dataset_catalog(std::istream& in) {
  std::vector<DatasetSpec> out;
  for_each_json_line(in, [&](const json& j, std::size_t) { out.push_back(dataset_from_json(j)); });
  return out;
}

}  // namespace advscale

#endif  // ADVSCALE_RUN_DATA_HPP
