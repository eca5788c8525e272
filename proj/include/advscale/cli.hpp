#ifndef ADVSCALE_CLI_HPP
#define ADVSCALE_CLI_HPP

// Command-line front end. Kept out of the umbrella header because it pulls
// in CLI11.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advscale/advscale.hpp"

namespace advscale::cli {

inline constexpr const char* kOutDirEnv = "ADVSCALE_OUT_DIR";

enum class Format { Csv, Records };

struct CommandConfig {
  std::string subcommand;
  std::string output;
  std::string format = "csv";
  std::uint64_t seed = 0;

  // inputs
  std::string runs_path;
  std::string params_path;
  std::string truth_path;
  std::string labels_path;
  std::string images_path;
  std::string map_runs_path;

  int approach = 2;
  std::vector<double> fids;
  std::vector<double> flops;

  // ingest
  bool check_flops = false;
  // envelope
  std::string generator;
  int queries = 1000;
  bool trailing_min = false;
  std::string fits_output;
  // fit2 / fit3
  std::string base_generator = "DG";
  bool no_filter = false;
  bool final_only = false;
  unsigned threads = 0;
  // overhead
  std::vector<double> omega_n;
  // frontier
  double flops_min = 1e17;
  double flops_max = 1e27;
  int points = 41;
  double map_slope = LossAccuracyMap::published().slope;
  double map_intercept = LossAccuracyMap::published().intercept;
  // validity
  std::int64_t sota_correct = 7371;
  std::int64_t total_test = 10000;
  std::string population = "humans";
  std::string per_image_output;
  // synth
  double sigma = 0.0;
  std::vector<std::string> generators;
  std::vector<std::int64_t> model_sizes;
  std::vector<std::int64_t> dataset_sizes;
  int eval_points = 40;
  bool additive = false;
  bool planted_accuracy = false;
};

// ---------------------------------------------------------------------------
// Tables

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) { rows.push_back(std::move(row)); }
};

namespace detail {

inline std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number()) {
    const double d = v.get<double>();
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    if (std::isnan(d)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", d);
    return buf;
  }
  auto s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace detail

inline void write_table(std::ostream& out, const Table& t, Format f) {
  if (f == Format::Csv) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << (i ? "," : "") << detail::csv_cell(row[i]);
      }
      out << '\n';
    }
    return;
  }
  for (const auto& row : t.rows) {
    json rec = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) rec[t.columns[i]] = row[i];
    out << rec.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Output routing: --output, else $ADVSCALE_OUT_DIR/<name>.<ext>, else stdout.

class Sink {
public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty()) return;
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw UsageError("cannot open output file '" + path + "'");
    os_ = file_.get();
  }
  std::ostream& stream() { return *os_; }
  bool is_file() const { return file_ != nullptr; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

inline Format parse_format(const std::string& s) {
  return s == "csv" ? Format::Csv : Format::Records;
}

inline const char* extension(Format f) { return f == Format::Csv ? "csv" : "jsonl"; }

inline std::string resolve_output(const std::string& explicit_path, const std::string& name,
                                  Format f) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) {
    return (std::filesystem::path(dir) / (name + "." + extension(f))).string();
  }
  return {};
}

// ---------------------------------------------------------------------------
// Subcommands

namespace detail {

inline std::vector<RunRecord> load_checked_runs(const std::string& path) {
  auto runs = load_runs(path);
  if (runs.empty()) throw DataError("'" + path + "' contains no run records");
  return runs;
}

inline std::vector<RunRecord> select_generator(std::vector<RunRecord> runs,
                                               const std::string& generator) {
  if (generator.empty()) return runs;
  std::vector<RunRecord> out;
  for (auto& r : runs) {
    if (r.dataset.generator == generator) out.push_back(std::move(r));
  }
  if (out.empty()) throw DataError("no runs with generator '" + generator + "'");
  return out;
}

inline AnyParams params_for(const CommandConfig& c) {
  if (c.params_path.empty()) {
    if (c.approach == 3) return Approach3Params::published();
    return Approach2Params::published();
  }
  auto p = load_params(c.params_path);
  const int form = std::holds_alternative<Approach2Params>(p) ? 2 : 3;
  if (form != c.approach) {
    throw UsageError("--approach " + std::to_string(c.approach) + " but '" + c.params_path +
                     "' holds approach-" + std::to_string(form) + " parameters");
  }
  return p;
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw UsageError("FLOPs grid needs 0 < flops-min < flops-max and at least 2 points");
  }
  std::vector<double> g;
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < n; ++i) g.push_back(std::pow(10.0, a + (b - a) * i / (n - 1)));
  g.back() = hi;
  return g;
}

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(); }

}  // namespace detail

inline int cmd_ingest(const CommandConfig& c, std::ostream& out) {
  const auto runs = detail::load_checked_runs(c.runs_path);
  const CostModel cost;
  Table t{{"run_id", "generator", "fid", "model", "params_n", "size_samples", "observations",
           "final_samples", "final_flops", "final_loss", "final_adv_acc", "flops_rel_error",
           "fit_filter_drops"},
          {}};
  for (const auto& r : runs) {
    const double err = cost.max_relative_flops_error(r);
    if (c.check_flops && !(err < 0.01)) {
      throw DataError("run '" + r.run_id + "': train_flops deviates from " +
                      std::to_string(cost.nd_coefficient) + "*N*D by " +
                      std::to_string(err * 100.0) + "%");
    }
    const auto& o = r.final_observation();
    t.add({r.run_id, r.dataset.generator, r.dataset.fid, r.model.name, r.model.params_n,
           r.dataset.size_samples, r.observations.size(), o.samples_seen, o.train_flops,
           o.trades_loss, detail::opt_json(o.adv_acc), err, fit_filter_drops(r)});
  }
  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "ingest", f), out);
  write_table(sink.stream(), t, f);
  return 0;
}

inline int cmd_envelope(const CommandConfig& c, std::ostream& out) {
  const auto runs = detail::select_generator(detail::load_checked_runs(c.runs_path), c.generator);
  EnvelopeOptions opt;
  opt.n_query = c.queries;
  opt.trailing_minimum = c.trailing_min;
  const auto env = compute_envelope(runs, opt);
  const auto mono = monotone_filter(env);
  const auto fits = fit_power_laws(mono);

  Table pts{{"flops", "loss", "n_star", "d_star", "run_id", "monotone"}, {}};
  std::size_t k = 0;
  for (const auto& p : env) {
    const bool kept = k < mono.points.size() && mono.points[k].flops == p.flops;
    if (kept) ++k;
    pts.add({p.flops, p.loss, p.n_star, p.d_star, p.run_id, kept});
  }
  Table ft{{"quantity", "exponent", "log10_coefficient", "r_squared", "points"}, {}};
  const auto np = mono.points.size();
  ft.add({"n_star", fits.n_fit.exponent, fits.n_fit.log10_coefficient, fits.n_fit.r_squared, np});
  ft.add({"d_star", fits.d_fit.exponent, fits.d_fit.log10_coefficient, fits.d_fit.r_squared, np});
  ft.add({"loss", fits.l_fit.exponent, fits.l_fit.log10_coefficient, fits.l_fit.r_squared, np});

  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "envelope", f), out);
  write_table(sink.stream(), pts, f);
  std::string fits_path = c.fits_output;
  if (fits_path.empty() && sink.is_file()) {
    auto p = std::filesystem::path(resolve_output(c.output, "envelope", f));
    fits_path = (p.parent_path() / (p.stem().string() + "_fits." + extension(f))).string();
  }
  if (fits_path.empty()) {
    sink.stream() << '\n';
    write_table(sink.stream(), ft, f);
  } else {
    Sink fs(fits_path, out);
    write_table(fs.stream(), ft, f);
  }
  return 0;
}

template <typename Params>
void write_fit(const CommandConfig& c, const FitReport<Params>& fit, const char* name,
               std::ostream& out) {
  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, name, f), out);
  if (f == Format::Records) {
    sink.stream() << fit_to_json(fit, static_cast<std::int64_t>(c.seed)).dump() << '\n';
    return;
  }
  Table t{{"parameter", "value"}, {}};
  for (const auto& [k, v] : params_to_json(fit.params).items()) t.add({k, v});
  for (const auto& st : fit.stages) {
    const auto& w = st.best();
    t.add({"stage." + st.name + ".objective", w.objective});
    t.add({"stage." + st.name + ".gradient_norm", w.gradient_norm});
    t.add({"stage." + st.name + ".status", std::string(to_string(w.status))});
    t.add({"stage." + st.name + ".starts", st.starts.size()});
  }
  t.add({"dropped_runs", fit.dropped_runs.size()});
  write_table(sink.stream(), t, f);
}

inline FitConfig fit_config(const CommandConfig& c, FitConfig cfg) {
  cfg.filter_enabled = !c.no_filter;
  cfg.use_all_observations = !c.final_only;
  cfg.threads = c.threads;
  return cfg;
}

inline int cmd_fit2(const CommandConfig& c, std::ostream& out) {
  const auto runs = detail::load_checked_runs(c.runs_path);
  const auto fit = fit_approach2(runs, c.base_generator, fit_config(c, FitConfig::approach2()));
  write_fit(c, fit, "fit2", out);
  return 0;
}

inline int cmd_fit3(const CommandConfig& c, std::ostream& out) {
  const auto runs = detail::load_checked_runs(c.runs_path);
  const auto fit = fit_approach3(runs, fit_config(c, FitConfig::approach3()));
  write_fit(c, fit, "fit3", out);
  return 0;
}

inline int cmd_allocate(const CommandConfig& c, std::ostream& out) {
  const auto p = detail::params_for(c);
  Table t{{"approach", "fid", "flops", "n_star", "d_star", "l_star", "e_prime", "a", "b", "g",
           "local_exponents", "boundary_warning"},
          {}};
  for (double fid : c.fids) {
    for (double fl : c.flops) {
      const auto a = optimal_allocation(fl, fid, p);
      t.add({c.approach, fid, fl, a.n_star, a.d_star, a.l_star,
             std::visit([&](const auto& v) { return v.effective_E(fid); }, p), a.a, a.b, a.g,
             a.local_exponents, a.boundary_warning});
    }
  }
  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "allocate", f), out);
  write_table(sink.stream(), t, f);
  return 0;
}

inline int cmd_overhead(const CommandConfig& c, std::ostream& out) {
  if (c.approach != 2) throw UsageError("overhead is defined for approach 2 only");
  const auto p = std::get<Approach2Params>(detail::params_for(c));
  if (c.flops.size() != 1) throw UsageError("overhead takes exactly one --flops value");
  std::vector<double> omegas = c.omega_n;
  if (omegas.empty()) {
    for (int i = 5; i <= 40; ++i) omegas.push_back(i * 0.05);
  }
  Table t{{"fid", "flops", "omega_n", "omega_d", "overhead_pct"}, {}};
  for (double fid : c.fids) {
    for (const auto& pt : overhead_curve(c.flops.front(), fid, p, omegas)) {
      t.add({fid, c.flops.front(), pt.omega_n, pt.omega_d, pt.overhead_pct});
    }
  }
  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "overhead", f), out);
  write_table(sink.stream(), t, f);
  return 0;
}

inline int cmd_loss_acc(const CommandConfig& c, std::ostream& out) {
  const auto runs = detail::select_generator(detail::load_checked_runs(c.runs_path), c.generator);
  const auto m = fit_loss_accuracy(runs);
  Table t{{"slope", "intercept", "r_squared"}, {}};
  t.add({m.slope, m.intercept, m.r_squared});
  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "loss_acc", f), out);
  write_table(sink.stream(), t, f);
  return 0;
}

inline int cmd_frontier(const CommandConfig& c, std::ostream& out) {
  const auto p = detail::params_for(c);
  LossAccuracyMap map{c.map_slope, c.map_intercept, 0.0};
  if (!c.map_runs_path.empty()) map = fit_loss_accuracy(detail::load_checked_runs(c.map_runs_path));
  std::vector<double> fids = c.fids;
  const auto grid = detail::log_grid(c.flops_min, c.flops_max, c.points);
  const auto table = frontier(p, map, fids, grid);
  Table t{{"fid", "flops", "n_star", "d_star", "l_star", "accuracy"}, {}};
  const double inf = std::numeric_limits<double>::infinity();
  std::size_t row = 0;
  for (const auto& a : table.asymptotes) {
    for (std::size_t i = 0; i < grid.size(); ++i, ++row) {
      const auto& r = table.rows[row];
      t.add({r.fid, r.flops, r.n_star, r.d_star, r.l_star, r.accuracy});
    }
    t.add({a.fid, inf, inf, inf, a.loss, a.accuracy});
  }
  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "frontier", f), out);
  write_table(sink.stream(), t, f);
  return 0;
}

inline int cmd_validity(const CommandConfig& c, std::ostream& out) {
  const auto labels = load_labels(c.labels_path);
  const auto images = load_images(c.images_path);
  const auto rep = adjudicate(labels, images);
  const auto pop = c.population == "all" ? AveragingPopulation::AllUsers
                                         : AveragingPopulation::Humans;
  std::set<std::string> all_ids;
  for (const auto& m : images) all_ids.insert(m.image_id);
  const HumanCorrect human{average_correct(labels, images, all_ids, pop),
                           average_correct(labels, images, rep.valid_ids, pop)};
  const auto b = revised_benchmark(rep, c.sota_correct, c.total_test, human);

  Table t{{"metric", "value"}, {}};
  t.add({"corpus_images", rep.corpus_size()});
  t.add({"valid", rep.valid_ids.size()});
  t.add({"invalid", rep.invalid_ids.size()});
  t.add({"deceptive", rep.deceptive_ids.size()});
  t.add({"ambiguous", rep.ambiguous_ids.size()});
  t.add({"sota_correct", b.sota_correct});
  t.add({"total_test", b.total_test});
  t.add({"avg_correct_corpus", human.on_corpus});
  t.add({"avg_correct_valid", human.on_valid});
  t.add({"sota_all_pct", 100.0 * b.sota_all});
  t.add({"sota_valid_pct", 100.0 * b.sota_valid});
  t.add({"human_all_pct", 100.0 * b.human_all});
  t.add({"human_valid_pct", 100.0 * b.human_valid});
  const std::pair<Condition, ConfidenceFilter> views[] = {
      {Condition::Adversarial, ConfidenceFilter::Any},
      {Condition::Adversarial, ConfidenceFilter::High},
      {Condition::Adversarial, ConfidenceFilter::Low},
      {Condition::Clean, ConfidenceFilter::Any}};
  for (const auto& [cond, filt] : views) {
    const std::string suffix = std::string(to_string(cond)) +
                               (filt == ConfidenceFilter::High  ? ".high"
                                : filt == ConfidenceFilter::Low ? ".low"
                                                                : "");
    for (const auto& u : user_accuracy(labels, images, cond, filt)) {
      if (u.total == 0) continue;
      t.add({"accuracy_pct." + u.user_id + "." + suffix, 100.0 * u.accuracy()});
    }
  }
  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "validity", f), out);
  write_table(sink.stream(), t, f);

  if (!c.per_image_output.empty()) {
    Table img{{"image_id", "status"}, {}};
    for (const auto& m : images) {
      const char* s = rep.valid_ids.count(m.image_id)       ? "valid"
                      : rep.deceptive_ids.count(m.image_id) ? "deceptive"
                                                            : "ambiguous";
      img.add({m.image_id, s});
    }
    Sink is(c.per_image_output, out);
    write_table(is.stream(), img, f);
  }
  return 0;
}

inline int cmd_synth(const CommandConfig& c, std::ostream& out) {
  const auto truth = load_params(c.truth_path);
  std::vector<DatasetSpec> gens;
  if (!c.fids.empty()) {
    if (c.dataset_sizes.empty()) throw UsageError("--fid needs --dataset-sizes");
    for (double fid : c.fids) gens.push_back({advscale::detail::generator_for(fid), fid, 0});
  } else if (c.generators.empty()) {
    gens = dataset_catalog();
  } else {
    for (const auto& g : c.generators) {
      auto d = find_dataset(g);
      if (!d) throw UsageError("unknown generator '" + g + "'");
      gens.push_back(*d);
    }
  }

  std::vector<RunRecord> runs;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    SynthDesign d = gens[i].size_samples > 0 ? catalog_design(gens[i]) : SynthDesign{};
    d.fids = {gens[i].fid};
    if (!c.model_sizes.empty() || d.model_sizes.empty()) d.model_sizes = c.model_sizes;
    if (!c.dataset_sizes.empty()) d.dataset_sizes = c.dataset_sizes;
    if (d.model_sizes.empty()) {
      for (const auto& m : model_catalog()) d.model_sizes.push_back(m.params_n);
    }
    d.eval_points_per_run = c.eval_points;
    d.noise_sigma = c.sigma;
    d.seed = advscale::detail::splitmix64(c.seed ^ (0x51ed2701ULL * (i + 1)));
    d.additive_noise = c.additive;
    if (c.planted_accuracy) d.planted_accuracy = PlantedAccuracy{};
    auto part = generate_runs(truth, d);
    runs.insert(runs.end(), part.begin(), part.end());
  }

  const auto f = parse_format(c.format);
  Sink sink(resolve_output(c.output, "synth", f), out);
  if (f == Format::Records) {
    write_runs(sink.stream(), runs);
    return 0;
  }
  Table t{{"run_id", "generator", "fid", "params_n", "size_samples", "samples_seen", "train_flops",
           "trades_loss", "adv_acc"},
          {}};
  for (const auto& r : runs) {
    for (const auto& o : r.observations) {
      t.add({r.run_id, r.dataset.generator, r.dataset.fid, r.model.params_n,
             r.dataset.size_samples, o.samples_seen, o.train_flops, o.trades_loss,
             detail::opt_json(o.adv_acc)});
    }
  }
  write_table(sink.stream(), t, f);
  return 0;
}

// ---------------------------------------------------------------------------
// Argument parsing

inline std::unique_ptr<CLI::App> build_app(CommandConfig& c) {
  auto app = std::make_unique<CLI::App>(
      "Scaling-law fitting, compute-optimal allocation and label-validity tools for "
      "adversarially trained image classifiers.",
      "advscale");
  app->require_subcommand(1, 1);
  app->fallthrough(false);

  auto common = [&](CLI::App* s) {
    s->add_option("-o,--output", c.output,
                  std::string("Output file (default: $") + kOutDirEnv +
                      "/<command>.<ext> if set, else stdout)");
    s->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"csv", "records", "line-records"}))
        ->capture_default_str();
    s->add_option("--seed", c.seed, "Seed for all randomness")->capture_default_str();
  };
  auto approach = [&](CLI::App* s) {
    s->add_option("--approach", c.approach, "Scaling-law form (2 or 3)")
        ->check(CLI::IsMember({2, 3}))
        ->capture_default_str();
    s->add_option("--params", c.params_path,
                  "Parameter record {\"form\", \"params\"} (default: published constants)")
        ->check(CLI::ExistingFile);
  };
  auto runs = [&](CLI::App* s) {
    s->add_option("--runs", c.runs_path, "Run-record file (JSON lines)")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto fit_flags = [&](CLI::App* s) {
    s->add_flag("--no-filter", c.no_filter, "Keep small-model/large-dataset runs");
    s->add_flag("--final-only", c.final_only, "Fit only the final observation of each run");
    s->add_option("--threads", c.threads, "Worker threads for grid starts (0 = all cores)")
        ->capture_default_str();
  };

  auto* ingest = app->add_subcommand("ingest", "Validate run records and summarize them");
  runs(ingest);
  ingest->add_flag("--check-flops", c.check_flops,
                   "Fail when train_flops deviates from 7822*N*D by 1% or more");
  common(ingest);

  auto* env = app->add_subcommand("envelope", "Compute-optimal envelope and power-law fits");
  runs(env);
  env->add_option("--generator", c.generator, "Only use runs of this dataset generator");
  env->add_option("--queries", c.queries, "Log-spaced FLOPs query points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  env->add_flag("--trailing-min", c.trailing_min, "Replace each curve by its running minimum");
  env->add_option("--fits-output", c.fits_output,
                  "File for the fit table (default: next to --output, or appended to stdout)");
  common(env);

  auto* fit2 = app->add_subcommand("fit2", "Two-stage fit of the additive quality-scaled law");
  runs(fit2);
  fit2->add_option("--base-generator", c.base_generator, "Generator of the stage-1 runs")
      ->capture_default_str();
  fit_flags(fit2);
  common(fit2);

  auto* fit3 = app->add_subcommand("fit3", "Fit of the quality-bottleneck law");
  runs(fit3);
  fit_flags(fit3);
  common(fit3);

  auto* alloc = app->add_subcommand("allocate", "Compute-optimal model and dataset size");
  approach(alloc);
  alloc->add_option("--fid", c.fids, "FID value(s)")
      ->check(CLI::NonNegativeNumber)
      ->delimiter(',');
  alloc->add_option("--flops", c.flops, "FLOPs budget(s)")
      ->required()
      ->check(CLI::PositiveNumber)
      ->delimiter(',');
  common(alloc);

  auto* over = app->add_subcommand("overhead", "Compute overhead of a non-optimal model size");
  approach(over);
  over->add_option("--fid", c.fids, "FID value(s)")->check(CLI::NonNegativeNumber)->delimiter(',');
  over->add_option("--flops", c.flops, "FLOPs budget")->required()->check(CLI::PositiveNumber);
  over->add_option("--omega-n", c.omega_n, "Model-size multipliers (default 0.25..2 step 0.05)")
      ->check(CLI::PositiveNumber)
      ->delimiter(',');
  common(over);

  auto* la = app->add_subcommand("loss-acc", "Linear fit of adversarial accuracy on loss");
  runs(la);
  la->add_option("--generator", c.generator, "Only use runs of this dataset generator");
  common(la);

  auto* front = app->add_subcommand("frontier", "Predicted accuracy frontier over FLOPs");
  approach(front);
  front->add_option("--fid", c.fids, "FID value(s) (default: 0 and the catalog generators)")
      ->check(CLI::NonNegativeNumber)
      ->delimiter(',');
  front->add_option("--flops-min", c.flops_min, "Smallest FLOPs budget")->capture_default_str();
  front->add_option("--flops-max", c.flops_max, "Largest FLOPs budget")->capture_default_str();
  front->add_option("--points", c.points, "Log-spaced budgets per FID")->capture_default_str();
  front->add_option("--map-slope", c.map_slope, "Loss-to-accuracy slope")->capture_default_str();
  front->add_option("--map-intercept", c.map_intercept, "Loss-to-accuracy intercept")
      ->capture_default_str();
  front->add_option("--map-runs", c.map_runs_path,
                    "Fit the loss-to-accuracy map from these runs instead")
      ->check(CLI::ExistingFile);
  common(front);

  auto* val = app->add_subcommand("validity", "Adjudicate attacked images and revise accuracy");
  val->add_option("--labels", c.labels_path, "Label-record file")
      ->required()
      ->check(CLI::ExistingFile);
  val->add_option("--images", c.images_path, "Image metadata file")
      ->required()
      ->check(CLI::ExistingFile);
  val->add_option("--sota-correct", c.sota_correct,
                  "Test images the model classifies correctly under attack")
      ->capture_default_str();
  val->add_option("--total", c.total_test, "Size of the test set")->capture_default_str();
  val->add_option("--population", c.population, "Users averaged for the human-augmented row")
      ->check(CLI::IsMember({"humans", "all"}))
      ->capture_default_str();
  val->add_option("--per-image-output", c.per_image_output, "File for per-image statuses");
  common(val);

  auto* syn = app->add_subcommand("synth", "Synthetic learning curves from known parameters");
  syn->add_option("--truth", c.truth_path, "Parameter record of the ground truth")
      ->required()
      ->check(CLI::ExistingFile);
  syn->add_option("--sigma", c.sigma, "Noise standard deviation")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  syn->add_option("--generators", c.generators, "Catalog generators (default: all)")
      ->delimiter(',');
  syn->add_option("--fid", c.fids, "Explicit FID values instead of catalog generators")
      ->check(CLI::NonNegativeNumber)
      ->delimiter(',');
  syn->add_option("--model-sizes", c.model_sizes, "Parameter counts (default: catalog models)")
      ->check(CLI::PositiveNumber)
      ->delimiter(',');
  syn->add_option("--dataset-sizes", c.dataset_sizes,
                  "Training-set sizes (default: catalog sizes per generator)")
      ->check(CLI::PositiveNumber)
      ->delimiter(',');
  syn->add_option("--eval-points", c.eval_points, "Evaluations per run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  syn->add_flag("--additive", c.additive, "Additive instead of log-normal noise");
  syn->add_flag("--planted-accuracy", c.planted_accuracy,
                "Attach adv_acc from the published loss-to-accuracy line");
  common(syn);

  return app;
}

/// Parses argv (without the program name) and runs the chosen subcommand.
/// Returns 0 on success, 1 on usage errors and 2 on data or fit errors.
inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  CommandConfig c;
  auto app = build_app(c);
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app->parse(rev);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app->get_subcommands();
    out << (subs.empty() ? app->help() : subs.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app->get_subcommands();
    err << (subs.empty() ? app->help() : subs.front()->help());
    return 1;
  }

  c.subcommand = app->get_subcommands().front()->get_name();
  if (c.fids.empty() && (c.subcommand == "allocate" || c.subcommand == "overhead")) {
    c.fids = {0.0};
  }
  if (c.fids.empty() && c.subcommand == "frontier") {
    c.fids = {0.0};
    for (const auto& d : dataset_catalog()) c.fids.push_back(d.fid);
  }

  try {
    if (c.subcommand == "ingest") return cmd_ingest(c, out);
    if (c.subcommand == "envelope") return cmd_envelope(c, out);
    if (c.subcommand == "fit2") return cmd_fit2(c, out);
    if (c.subcommand == "fit3") return cmd_fit3(c, out);
    if (c.subcommand == "allocate") return cmd_allocate(c, out);
    if (c.subcommand == "overhead") return cmd_overhead(c, out);
    if (c.subcommand == "loss-acc") return cmd_loss_acc(c, out);
    if (c.subcommand == "frontier") return cmd_frontier(c, out);
    if (c.subcommand == "validity") return cmd_validity(c, out);
    if (c.subcommand == "synth") return cmd_synth(c, out);
    err << "error: unknown subcommand '" << c.subcommand << "'\n";
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << '\n' << e.diagnostics() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace advscale::cli

#endif  // ADVSCALE_CLI_HPP
