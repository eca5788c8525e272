#ifndef ADVSCALE_VALIDITY_HPP
#define ADVSCALE_VALIDITY_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "advscale/error.hpp"
#include "advscale/run_data.hpp"

namespace advscale {

inline constexpr std::array<std::string_view, 10> kClassVocabulary = {
    "airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};

inline bool is_class_label(std::string_view s) {
  return std::find(kClassVocabulary.begin(), kClassVocabulary.end(), s) != kClassVocabulary.end();
}

enum class UserKind { Human, Machine };
enum class Condition { Clean, Adversarial };
enum class Confidence { Low, High };
enum class ConfidenceFilter { Any, Low, High };

struct ImageMeta {
  std::string image_id;
  std::string ground_truth;
  std::string sota_prediction;

  bool operator==(const ImageMeta&) const = default;
};

struct LabelRecord {
  std::string user_id;
  UserKind user_kind = UserKind::Human;
  std::string image_id;
  Condition condition = Condition::Adversarial;
  std::string predicted_class;
  Confidence confidence = Confidence::Low;

  bool operator==(const LabelRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Line-record encoding

inline std::string_view to_string(UserKind k) { return k == UserKind::Human ? "human" : "machine"; }
inline std::string_view to_string(Condition c) {
  return c == Condition::Clean ? "clean" : "adversarial";
}
inline std::string_view to_string(Confidence c) { return c == Confidence::Low ? "low" : "high"; }

inline json to_json(const LabelRecord& r) {
  return json{{"user_id", r.user_id},
              {"user_kind", to_string(r.user_kind)},
              {"image_id", r.image_id},
              {"condition", to_string(r.condition)},
              {"predicted_class", r.predicted_class},
              {"confidence", to_string(r.confidence)}};
}

inline json to_json(const ImageMeta& m) {
  return json{{"image_id", m.image_id},
              {"ground_truth", m.ground_truth},
              {"sota_prediction", m.sota_prediction}};
}

namespace detail {

template <typename Enum, std::size_t N>
Enum parse_enum(const json& j, const char* key,
                const std::array<std::pair<std::string_view, Enum>, N>& table) {
  const auto s = field<std::string>(j, key);
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  throw DataError(std::string("field '") + key + "' has invalid value '" + s + "'");
}

inline std::string class_field(const json& j, const char* key) {
  auto s = field<std::string>(j, key);
  if (!is_class_label(s)) {
    throw DataError(std::string("field '") + key + "' is not a class label: '" + s + "'");
  }
  return s;
}

}  // namespace detail

inline LabelRecord label_from_json(const json& j) {
  LabelRecord r;
  r.user_id = detail::field<std::string>(j, "user_id");
  r.user_kind = detail::parse_enum<UserKind, 2>(
      j, "user_kind", {{{"human", UserKind::Human}, {"machine", UserKind::Machine}}});
  r.image_id = detail::field<std::string>(j, "image_id");
  r.condition = detail::parse_enum<Condition, 2>(
      j, "condition", {{{"clean", Condition::Clean}, {"adversarial", Condition::Adversarial}}});
  r.predicted_class = detail::class_field(j, "predicted_class");
  r.confidence = detail::parse_enum<Confidence, 2>(
      j, "confidence", {{{"low", Confidence::Low}, {"high", Confidence::High}}});
  return r;
}

inline ImageMeta image_from_json(const json& j) {
  return ImageMeta{detail::field<std::string>(j, "image_id"), detail::class_field(j, "ground_truth"),
                   detail::class_field(j, "sota_prediction")};
}

/// Reads label records, rejecting a second record for the same
/// (user, image, condition).
inline std::vector<LabelRecord> read_labels(std::istream& in) {
  std::vector<LabelRecord> out;
  std::set<std::tuple<std::string, std::string, Condition>> seen;
  for_each_json_line(in, [&](const json& j, std::size_t lineno) {
    auto r = label_from_json(j);
    if (!seen.emplace(r.user_id, r.image_id, r.condition).second) {
      throw ParseError(lineno, "duplicate record for user '" + r.user_id + "', image '" +
                                   r.image_id + "', condition " +
                                   std::string(to_string(r.condition)));
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<ImageMeta> read_images(std::istream& in) {
  std::vector<ImageMeta> out;
  std::set<std::string> seen;
  for_each_json_line(in, [&](const json& j, std::size_t lineno) {
    auto m = image_from_json(j);
    if (!seen.insert(m.image_id).second) {
      throw ParseError(lineno, "duplicate image_id '" + m.image_id + "'");
    }
    out.push_back(std::move(m));
  });
  return out;
}

inline std::vector<LabelRecord> load_labels(const std::string& path) {
  auto in = open_input(path);
  return read_labels(in);
}

inline std::vector<ImageMeta> load_images(const std::string& path) {
  auto in = open_input(path);
  return read_images(in);
}

inline void write_labels(std::ostream& out, const std::vector<LabelRecord>& labels) {
  for (const auto& r : labels) out << to_json(r).dump() << '\n';
}

inline void write_images(std::ostream& out, const std::vector<ImageMeta>& images) {
  for (const auto& m : images) out << to_json(m).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Per-user accuracy

struct UserAccuracy {
  std::string user_id;
  UserKind user_kind = UserKind::Human;
  std::int64_t correct = 0;
  std::int64_t total = 0;

  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

using ImageIndex = std::unordered_map<std::string, const ImageMeta*>;

inline ImageIndex index_images(const std::vector<ImageMeta>& images) {
  ImageIndex idx;
  for (const auto& m : images) idx.emplace(m.image_id, &m);
  return idx;
}

namespace detail {

inline const ImageMeta& resolve(const ImageIndex& idx, const LabelRecord& r) {
  auto it = idx.find(r.image_id);
  if (it == idx.end()) {
    throw DataError("label record of user '" + r.user_id + "' names unknown image '" +
                    r.image_id + "'");
  }
  return *it->second;
}

inline bool passes(ConfidenceFilter f, Confidence c) {
  return f == ConfidenceFilter::Any || (f == ConfidenceFilter::Low) == (c == Confidence::Low);
}

}  // namespace detail

/// Correct / total per user over records of one condition and confidence
/// filter, ordered by user id. Users with no matching records are listed
/// with total 0.
inline std::vector<UserAccuracy> user_accuracy(const std::vector<LabelRecord>& labels,
                                               const std::vector<ImageMeta>& images,
                                               Condition condition,
                                               ConfidenceFilter filter = ConfidenceFilter::Any) {
  const auto idx = index_images(images);
  std::map<std::string, UserAccuracy> by_user;
  for (const auto& r : labels) {
    const auto& meta = detail::resolve(idx, r);
    auto& u = by_user[r.user_id];
    u.user_id = r.user_id;
    u.user_kind = r.user_kind;
    if (r.condition != condition || !detail::passes(filter, r.confidence)) continue;
    ++u.total;
    if (r.predicted_class == meta.ground_truth) ++u.correct;
  }
  std::vector<UserAccuracy> out;
  for (auto& [id, u] : by_user) out.push_back(std::move(u));
  return out;
}

// ---------------------------------------------------------------------------
// Validity adjudication

struct ValidityReport {
  std::set<std::string> valid_ids;
  std::set<std::string> invalid_ids;
  std::set<std::string> deceptive_ids;
  std::set<std::string> ambiguous_ids;

  std::size_t corpus_size() const { return valid_ids.size() + invalid_ids.size(); }
};

struct InvalidPartition {
  std::set<std::string> deceptive_ids;
  std::set<std::string> ambiguous_ids;
};

inline constexpr int kPanelHumans = 3;
inline constexpr int kPanelMachines = 1;
// Correct users (of the four) that make an image valid on their own.
inline constexpr int kMajorityCorrect = 2;

namespace detail {

struct Panel {
  std::vector<const LabelRecord*> humans;
  std::vector<const LabelRecord*> machines;
};

inline std::map<std::string, Panel> adversarial_panels(const std::vector<LabelRecord>& labels,
                                                       const std::vector<ImageMeta>& images) {
  const auto idx = index_images(images);
  std::map<std::string, Panel> panels;
  for (const auto& m : images) panels[m.image_id];
  for (const auto& r : labels) {
    resolve(idx, r);
    if (r.condition != Condition::Adversarial) continue;
    auto& p = panels[r.image_id];
    (r.user_kind == UserKind::Human ? p.humans : p.machines).push_back(&r);
  }
  std::vector<std::string> missing;
  for (const auto& [id, p] : panels) {
    if (static_cast<int>(p.humans.size()) != kPanelHumans ||
        static_cast<int>(p.machines.size()) != kPanelMachines) {
      missing.push_back(id);
    }
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << missing.size() << " image(s) lack adversarial records from exactly " << kPanelHumans
       << " human and " << kPanelMachines << " machine user(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) os << ' ' << missing[i];
    if (missing.size() > 20) os << " ...";
    throw DataError(os.str());
  }
  return panels;
}

}  // namespace detail

/// An attacked image is valid when at least two of the four users name its
/// ground truth, or when at least one human does so with high confidence.
/// Machine confidence never counts toward the second clause.
inline ValidityReport classify_validity(const std::vector<LabelRecord>& labels,
                                        const std::vector<ImageMeta>& images) {
  const auto panels = detail::adversarial_panels(labels, images);
  ValidityReport rep;
  for (const auto& m : images) {
    const auto& p = panels.at(m.image_id);
    int correct = 0;
    bool confident_human = false;
    for (const auto* r : p.humans) {
      if (r->predicted_class != m.ground_truth) continue;
      ++correct;
      confident_human |= r->confidence == Confidence::High;
    }
    for (const auto* r : p.machines) correct += r->predicted_class == m.ground_truth;
    (correct >= kMajorityCorrect || confident_human ? rep.valid_ids : rep.invalid_ids)
        .insert(m.image_id);
  }
  return rep;
}

/// Splits invalid images: deceptive when at least two of the three humans
/// agree on the same wrong class and that class is the model's prediction;
/// ambiguous otherwise.
inline InvalidPartition partition_invalid(const ValidityReport& report,
                                          const std::vector<LabelRecord>& labels,
                                          const std::vector<ImageMeta>& images) {
  const auto panels = detail::adversarial_panels(labels, images);
  const auto idx = index_images(images);
  InvalidPartition out;
  for (const auto& id : report.invalid_ids) {
    auto it = idx.find(id);
    if (it == idx.end()) throw DataError("report names unknown image '" + id + "'");
    const auto& meta = *it->second;
    std::map<std::string, int> votes;
    for (const auto* r : panels.at(id).humans) {
      if (r->predicted_class != meta.ground_truth) ++votes[r->predicted_class];
    }
    bool deceptive = false;
    for (const auto& [cls, n] : votes) {
      if (2 * n > kPanelHumans && cls == meta.sota_prediction) deceptive = true;
    }
    (deceptive ? out.deceptive_ids : out.ambiguous_ids).insert(id);
  }
  return out;
}

/// classify_validity followed by partition_invalid, filled into one report.
inline ValidityReport adjudicate(const std::vector<LabelRecord>& labels,
                                 const std::vector<ImageMeta>& images) {
  auto rep = classify_validity(labels, images);
  auto part = partition_invalid(rep, labels, images);
  rep.deceptive_ids = std::move(part.deceptive_ids);
  rep.ambiguous_ids = std::move(part.ambiguous_ids);
  return rep;
}

// ---------------------------------------------------------------------------
// Revised benchmark

enum class AveragingPopulation { Humans, AllUsers };

/// Mean number of correctly labelled adversarial images per user among
/// `ids`, averaged over the chosen population of users.
inline double average_correct(const std::vector<LabelRecord>& labels,
                              const std::vector<ImageMeta>& images,
                              const std::set<std::string>& ids, AveragingPopulation population) {
  const auto idx = index_images(images);
  std::map<std::string, std::int64_t> correct;
  for (const auto& r : labels) {
    const auto& meta = detail::resolve(idx, r);
    if (population == AveragingPopulation::Humans && r.user_kind != UserKind::Human) continue;
    auto& c = correct[r.user_id];
    if (r.condition != Condition::Adversarial || !ids.count(r.image_id)) continue;
    if (r.predicted_class == meta.ground_truth) ++c;
  }
  if (correct.empty()) throw DataError("no users in the averaging population");
  double sum = 0.0;
  for (const auto& [u, c] : correct) sum += static_cast<double>(c);
  return sum / static_cast<double>(correct.size());
}

struct HumanCorrect {
  double on_corpus = 0.0;  // of all study images
  double on_valid = 0.0;   // of the valid study images
};

struct BenchmarkTable {
  std::int64_t total_test = 0;
  std::int64_t sota_correct = 0;
  std::int64_t invalid = 0;
  double sota_all = 0.0;
  double sota_valid = 0.0;
  double human_all = 0.0;
  double human_valid = 0.0;
};

/// Model accuracy with and without invalid images, and the bound obtained by
/// crediting the model's correct images plus the average user's correct
/// labels on the rest.
inline BenchmarkTable revised_benchmark(const ValidityReport& report, std::int64_t sota_correct,
                                        std::int64_t total_test, const HumanCorrect& human) {
  const auto corpus = static_cast<std::int64_t>(report.corpus_size());
  if (sota_correct < 0 || sota_correct + corpus != total_test) {
    throw DataError("inconsistent counts: sota_correct (" + std::to_string(sota_correct) +
                    ") + study corpus (" + std::to_string(corpus) + ") != total_test (" +
                    std::to_string(total_test) + ")");
  }
  BenchmarkTable t;
  t.total_test = total_test;
  t.sota_correct = sota_correct;
  t.invalid = static_cast<std::int64_t>(report.invalid_ids.size());
  const double all = static_cast<double>(total_test);
  const double valid = static_cast<double>(total_test - t.invalid);
  t.sota_all = sota_correct / all;
  t.sota_valid = sota_correct / valid;
  t.human_all = (sota_correct + human.on_corpus) / all;
  t.human_valid = (sota_correct + human.on_valid) / valid;
  return t;
}

}  // namespace advscale

#endif  // ADVSCALE_VALIDITY_HPP
