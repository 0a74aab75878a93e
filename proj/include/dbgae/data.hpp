#pragma once

// GPLL data model: groups of instances paired with candidate label
// occurrences, a synthetic generator with controllable ambiguity, JSON Lines
// serialization and dataset statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbgae/error.hpp"

namespace dbgae {

using ClassId = int;
// Class of instances whose name never appears in any candidate label set.
inline constexpr ClassId kNullClass = -1;

using FeatureVector = std::vector<double>;

struct LabelOccurrence {
  ClassId class_id = 0;
  int group_id = 0;
  int slot = 0;

  friend bool operator==(const LabelOccurrence&, const LabelOccurrence&) = default;
};

struct Instance {
  int instance_id = 0;
  int group_id = 0;
  FeatureVector features;
  // Evaluation-only ground truth; kNullClass for null instances.
  std::optional<ClassId> true_class;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Group {
  int group_id = 0;
  std::vector<Instance> instances;
  std::vector<LabelOccurrence> labels;

  friend bool operator==(const Group&, const Group&) = default;
};

struct GpllDataset {
  std::vector<Group> groups;
  int num_classes = 0;
  int feature_dim = 0;
  std::string provenance;

  std::size_t num_instances() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.instances.size();
    return n;
  }
  std::size_t num_labels() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.labels.size();
    return n;
  }
  bool has_ground_truth() const {
    for (const auto& g : groups)
      for (const auto& x : g.instances)
        if (!x.true_class) return false;
    return true;
  }

  // Provenance is descriptive only and does not take part in equality.
  friend bool operator==(const GpllDataset& a, const GpllDataset& b) {
    return a.num_classes == b.num_classes && a.feature_dim == b.feature_dim && a.groups == b.groups;
  }
};

// ---------------------------------------------------------------------------
// Synthetic generator

struct GeneratorConfig {
  int num_classes = 20;
  int feature_dim = 32;
  int num_groups = 200;
  int min_instances = 1;
  int max_instances = 4;
  int min_labels = 1;
  int max_labels = 8;
  double separation = 6.0;
  double noise_scale = 1.0;
  double null_rate = 0.2;
  double cross_rate = 0.2;
  double distractor_rate = 0.3;
  // Background identities that null instances are drawn from; 0 means 50 * num_classes,
  // so unnamed extras rarely recur.
  int num_null_identities = 0;
  std::uint64_t rng_seed = 7;

  void validate() const {
    if (num_classes < 1) throw ConfigError("num_classes", "must be >= 1");
    if (feature_dim < 1) throw ConfigError("feature_dim", "must be >= 1");
    if (num_groups < 0) throw ConfigError("num_groups", "must be >= 0");
    if (min_instances < 0) throw ConfigError("min_instances", "must be >= 0");
    if (max_instances < min_instances) throw ConfigError("max_instances", "must be >= min_instances");
    if (min_labels < 0) throw ConfigError("min_labels", "must be >= 0");
    if (max_labels < min_labels) throw ConfigError("max_labels", "must be >= min_labels");
    if (!(separation > 0)) throw ConfigError("separation", "must be > 0");
    if (!(noise_scale > 0)) throw ConfigError("noise_scale", "must be > 0");
    if (!(null_rate >= 0 && null_rate <= 1)) throw ConfigError("null_rate", "must be in [0,1]");
    if (!(cross_rate >= 0 && cross_rate <= 1)) throw ConfigError("cross_rate", "must be in [0,1]");
    if (null_rate + cross_rate > 1 + 1e-12) throw ConfigError("cross_rate", "null_rate + cross_rate must be <= 1");
    if (!(distractor_rate >= 0)) throw ConfigError("distractor_rate", "must be >= 0");
    if (num_null_identities < 0) throw ConfigError("num_null_identities", "must be >= 0");
    if (cross_rate > 0 && num_groups < 2) throw ConfigError("cross_rate", "cross-group displacement needs >= 2 groups");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GeneratorConfig, num_classes, feature_dim, num_groups, min_instances,
                                                max_instances, min_labels, max_labels, separation, noise_scale,
                                                null_rate, cross_rate, distractor_rate, num_null_identities, rng_seed)

namespace detail {

inline FeatureVector gaussian_vector(std::mt19937_64& rng, int dim, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureVector v(dim);
  for (auto& x : v) x = scale * normal(rng);
  return v;
}

// One draw from `items` with probability proportional to `weights`.
inline int weighted_pick(std::mt19937_64& rng, const std::vector<int>& items, const std::vector<double>& weights) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return items[pick(rng)];
}

// Crowding weight of a level: crowded classes attract most of the ambiguity.
inline double crowding(double level) { return 0.02 + level * level; }

// Weight of a group for receiving a null or displaced instance.
inline double disruption(double level) { return 0.1 + level; }

}  // namespace detail

// Class prototypes are isotropic Gaussian centres with expected norm
// `separation`; per-coordinate noise has standard deviation
// noise_scale / (2 sqrt(d)), so same-class instances sit about
// 0.7 * noise_scale apart and a unit distance threshold separates identities.
//
// Each class carries a latent crowding level in [0,1]. A group is seeded by a
// lead class whose level drives the group size, the expected number of
// distractor names and how likely its members lose their names, so per-class
// ambiguity spreads over a wide range instead of concentrating at the mean.
// Companions and distractor names follow a separate popularity order.
inline GpllDataset generate_synthetic(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.rng_seed);
  const int C = config.num_classes;
  const int d = config.feature_dim;
  const int K = config.num_groups;
  const int num_null_ids = config.num_null_identities > 0 ? config.num_null_identities : 50 * C;
  const double proto_scale = config.separation / std::sqrt(static_cast<double>(d));
  const double noise_sd = config.noise_scale / (2.0 * std::sqrt(static_cast<double>(d)));

  std::vector<FeatureVector> prototypes, null_prototypes;
  for (int c = 0; c < C; ++c) prototypes.push_back(detail::gaussian_vector(rng, d, proto_scale));
  for (int c = 0; c < num_null_ids; ++c) null_prototypes.push_back(detail::gaussian_vector(rng, d, proto_scale));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> level(C);
  // Cubed uniform: most classes are rarely crowded, a few are crowded often.
  for (auto& a : level) a = std::pow(unit(rng), 3.0);
  // Popularity follows a Zipf law over a random class order: a few leading
  // characters join many groups and their names turn up as distractors.
  std::vector<int> popularity_rank(C);
  std::iota(popularity_rank.begin(), popularity_rank.end(), 0);
  std::shuffle(popularity_rank.begin(), popularity_rank.end(), rng);

  std::uniform_int_distribution<int> pick_class(0, C - 1);
  std::vector<int> lead(K), group_size(K);
  for (int g = 0; g < K; ++g) {
    lead[g] = pick_class(rng);
    std::binomial_distribution<int> extra(config.max_instances - config.min_instances,
                                          level[lead[g]] * level[lead[g]]);
    group_size[g] = config.min_instances + extra(rng);
  }

  enum class Status { kNormal, kNull, kCross };
  const int total = std::accumulate(group_size.begin(), group_size.end(), 0);
  const int n_null = static_cast<int>(std::lround(config.null_rate * total));
  const int n_cross = std::min(total - n_null, static_cast<int>(std::lround(config.cross_rate * total)));
  // Exact null / cross counts, placed preferentially in crowded groups
  // (weighted sampling without replacement via exponential keys).
  std::vector<Status> status(total, Status::kNormal);
  {
    std::vector<std::pair<double, int>> keys;
    std::exponential_distribution<double> expo(1.0);
    int slot = 0;
    for (int g = 0; g < K; ++g)
      for (int m = 0; m < group_size[g]; ++m) keys.emplace_back(expo(rng) / detail::disruption(level[lead[g]]), slot++);
    std::sort(keys.begin(), keys.end());
    std::vector<Status> special(n_null, Status::kNull);
    special.resize(n_null + n_cross, Status::kCross);
    std::shuffle(special.begin(), special.end(), rng);
    for (std::size_t k = 0; k < special.size(); ++k) status[keys[k].second] = special[k];
  }

  GpllDataset ds;
  ds.num_classes = C;
  ds.feature_dim = d;
  ds.provenance = nlohmann::json(config).dump();
  ds.groups.resize(K);

  // (group, class) of every displaced true label, placed after all groups exist.
  std::vector<std::pair<int, ClassId>> displaced;
  std::vector<std::vector<ClassId>> label_classes(K);
  int next_id = 0;
  for (int g = 0; g < K; ++g) {
    Group& group = ds.groups[g];
    group.group_id = g;
    std::vector<char> used_class(C, 0), used_null(num_null_ids, 0);
    bool lead_placed = false;
    for (int m = 0; m < group_size[g]; ++m) {
      const Status st = status[next_id];
      Instance inst;
      inst.instance_id = next_id++;
      inst.group_id = g;
      if (st == Status::kNull) {
        std::vector<int> free_ids;
        for (int b = 0; b < num_null_ids; ++b)
          if (!used_null[b]) free_ids.push_back(b);
        if (free_ids.empty()) free_ids.resize(num_null_ids), std::iota(free_ids.begin(), free_ids.end(), 0);
        const int b = free_ids[std::uniform_int_distribution<std::size_t>(0, free_ids.size() - 1)(rng)];
        used_null[b] = 1;
        inst.features = null_prototypes[b];
        inst.true_class = kNullClass;
      } else {
        ClassId c = -1;
        if (!lead_placed) {
          c = lead[g];
          lead_placed = true;
        } else {
          // Companions follow name popularity: leading characters share many scenes.
          std::vector<double> weights(C, 0.0);
          double total_w = 0.0;
          for (int k = 0; k < C; ++k) {
            if (used_class[k]) continue;
            weights[k] = std::pow(1.0 + popularity_rank[k], -2.0);
            total_w += weights[k];
          }
          if (total_w > 0) {
            std::discrete_distribution<int> pick(weights.begin(), weights.end());
            c = pick(rng);
          } else {
            c = pick_class(rng);
          }
        }
        used_class[c] = 1;
        inst.features = prototypes[c];
        inst.true_class = c;
        if (st == Status::kNormal)
          label_classes[g].push_back(c);
        else
          displaced.emplace_back(g, c);
      }
      const auto noise = detail::gaussian_vector(rng, d, noise_sd);
      for (int k = 0; k < d; ++k) inst.features[k] += noise[k];
      group.instances.push_back(std::move(inst));
    }
  }

  auto group_has_instance_of = [&](int g, ClassId c) {
    for (const auto& x : ds.groups[g].instances)
      if (x.true_class == c) return true;
    return false;
  };
  auto group_has_label = [&](int g, ClassId c) {
    return std::find(label_classes[g].begin(), label_classes[g].end(), c) != label_classes[g].end();
  };

  // Displaced labels prefer crowded groups.
  for (const auto& [g, c] : displaced) {
    std::vector<int> targets;
    for (int h = 0; h < K; ++h)
      if (h != g && !group_has_instance_of(h, c) && !group_has_label(h, c)) targets.push_back(h);
    if (targets.empty())
      for (int h = 0; h < K; ++h)
        if (h != g) targets.push_back(h);
    std::vector<double> weights;
    for (int h : targets) weights.push_back(detail::crowding(level[lead[h]]));
    label_classes[detail::weighted_pick(rng, targets, weights)].push_back(c);
  }

  for (int g = 0; g < K; ++g) {
    auto& labels = label_classes[g];
    // Distractor names are drawn without replacement, preferring popular names.
    std::vector<ClassId> pool;
    std::vector<double> weights;
    for (int c = 0; c < C; ++c)
      if (!group_has_instance_of(g, c) && !group_has_label(g, c)) {
        pool.push_back(c);
        weights.push_back(std::pow(1.0 + popularity_rank[c], -3.0));
      }
    std::poisson_distribution<int> n_extra(2.0 * config.distractor_rate * level[lead[g]]);
    int want = n_extra(rng);
    while (!pool.empty() && (want > 0 || static_cast<int>(labels.size()) < config.min_labels) &&
           static_cast<int>(labels.size()) < config.max_labels) {
      std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
      const std::size_t k = pick(rng);
      labels.push_back(pool[k]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
      weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(k));
      --want;
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t s = 0; s < labels.size(); ++s)
      ds.groups[g].labels.push_back({labels[s], g, static_cast<int>(s)});
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Validation and serialization

inline void validate_dataset(const GpllDataset& ds) {
  if (ds.num_classes < 0) throw SchemaError("num_classes must be >= 0");
  if (ds.feature_dim < 0) throw SchemaError("feature_dim must be >= 0");
  std::set<int> ids;
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    const Group& group = ds.groups[g];
    if (group.group_id != static_cast<int>(g))
      throw SchemaError("group ids must be dense in [0,K); found " + std::to_string(group.group_id) + " at position " +
                        std::to_string(g));
    for (const auto& x : group.instances) {
      if (x.group_id != group.group_id) throw SchemaError("instance " + std::to_string(x.instance_id) + " has wrong group id");
      if (!ids.insert(x.instance_id).second) throw SchemaError("duplicate instance id " + std::to_string(x.instance_id));
      if (static_cast<int>(x.features.size()) != ds.feature_dim)
        throw SchemaError("instance " + std::to_string(x.instance_id) + " has " + std::to_string(x.features.size()) +
                          " features, expected " + std::to_string(ds.feature_dim));
      for (double v : x.features)
        if (!std::isfinite(v)) throw SchemaError("instance " + std::to_string(x.instance_id) + " has a non-finite feature");
      if (x.true_class && (*x.true_class < kNullClass || *x.true_class >= ds.num_classes))
        throw SchemaError("instance " + std::to_string(x.instance_id) + " true_class out of range");
    }
    std::set<int> slots;
    for (const auto& l : group.labels) {
      if (l.class_id < 0 || l.class_id >= ds.num_classes)
        throw SchemaError("group " + std::to_string(g) + " label class_id " + std::to_string(l.class_id) +
                          " outside [0," + std::to_string(ds.num_classes) + ")");
      if (l.group_id != group.group_id) throw SchemaError("label occurrence has wrong group id");
      if (!slots.insert(l.slot).second) throw SchemaError("duplicate slot in group " + std::to_string(g));
    }
  }
}

inline void write_dataset(const GpllDataset& ds, std::ostream& out) {
  nlohmann::json header = {{"num_classes", ds.num_classes}, {"feature_dim", ds.feature_dim}};
  if (!ds.provenance.empty()) header["provenance"] = ds.provenance;
  out << header.dump() << '\n';
  for (const auto& g : ds.groups) {
    nlohmann::json line;
    line["group_id"] = g.group_id;
    auto& insts = line["instances"] = nlohmann::json::array();
    for (const auto& x : g.instances) {
      nlohmann::json j = {{"id", x.instance_id}, {"features", x.features}};
      if (x.true_class) j["true_class"] = *x.true_class;
      insts.push_back(std::move(j));
    }
    auto& labels = line["labels"] = nlohmann::json::array();
    for (const auto& l : g.labels) labels.push_back({{"class_id", l.class_id}, {"slot", l.slot}});
    out << line.dump() << '\n';
  }
}

inline GpllDataset read_dataset(std::istream& in, const std::string& source = "") {
  GpllDataset ds;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  try {
    while (std::getline(in, text)) {
      ++line_no;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
      }
      if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
      if (!have_header) {
        if (!j.contains("num_classes") || !j.contains("feature_dim"))
          throw ParseError(line_no, "first line must be a header with num_classes and feature_dim");
        ds.num_classes = j.at("num_classes").get<int>();
        ds.feature_dim = j.at("feature_dim").get<int>();
        ds.provenance = j.value("provenance", source.empty() ? std::string() : "import:" + source);
        have_header = true;
        continue;
      }
      Group g;
      g.group_id = j.at("group_id").get<int>();
      for (const auto& xi : j.at("instances")) {
        Instance x;
        x.instance_id = xi.at("id").get<int>();
        x.group_id = g.group_id;
        x.features = xi.at("features").get<FeatureVector>();
        if (xi.contains("true_class") && !xi.at("true_class").is_null()) x.true_class = xi.at("true_class").get<int>();
        if (static_cast<int>(x.features.size()) != ds.feature_dim)
          throw SchemaError("line " + std::to_string(line_no) + ": instance " + std::to_string(x.instance_id) +
                            " has dimension " + std::to_string(x.features.size()) + ", header says " +
                            std::to_string(ds.feature_dim));
        g.instances.push_back(std::move(x));
      }
      for (const auto& li : j.at("labels"))
        g.labels.push_back({li.at("class_id").get<int>(), g.group_id, li.at("slot").get<int>()});
      ds.groups.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad record: ") + e.what());
  }
  if (!have_header) throw ParseError(line_no, "missing header line");
  std::stable_sort(ds.groups.begin(), ds.groups.end(),
                   [](const Group& a, const Group& b) { return a.group_id < b.group_id; });
  validate_dataset(ds);
  return ds;
}

inline void save_dataset(const GpllDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_dataset(ds, out);
  if (!out) throw IoError("write failed: " + path);
}

inline GpllDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return read_dataset(in, path);
}

// ---------------------------------------------------------------------------
// Ambiguity statistics

// Correct (s_t) and wrong-but-touching (s_f) candidate link counts for one
// class, summed over groups. Each link counts once even if both endpoints
// belong to the class.
struct ClassLinkCounts {
  std::size_t correct = 0;
  std::size_t wrong = 0;
};

// Index 0 is the null class, index c + 1 is class c.
inline std::vector<ClassLinkCounts> class_link_counts(const GpllDataset& ds) {
  if (!ds.has_ground_truth()) throw ContractError("ambiguity statistics need ground truth for every instance");
  std::vector<ClassLinkCounts> counts(ds.num_classes + 1);
  for (const auto& g : ds.groups) {
    for (const auto& x : g.instances) {
      const ClassId t = *x.true_class;
      for (const auto& l : g.labels) {
        if (t == l.class_id) {
          ++counts[t + 1].correct;
          continue;
        }
        ++counts[t + 1].wrong;
        ++counts[l.class_id + 1].wrong;
      }
    }
  }
  return counts;
}

inline std::optional<double> ratio_from_counts(const ClassLinkCounts& c) {
  const std::size_t total = c.correct + c.wrong;
  if (total == 0) return std::nullopt;
  return 1.0 - static_cast<double>(c.correct) / static_cast<double>(total);
}

// Fraction of the candidate links touching `class_id` that are wrong.
inline double ambiguity_ratio(const GpllDataset& ds, ClassId class_id) {
  if (class_id < 0 || class_id >= ds.num_classes)
    throw ContractError("class_id " + std::to_string(class_id) + " outside [0," + std::to_string(ds.num_classes) + ")");
  const auto r = ratio_from_counts(class_link_counts(ds)[class_id + 1]);
  if (!r) throw SchemaError("ambiguity ratio undefined for class " + std::to_string(class_id) + ": no candidate links");
  return *r;
}

// Number of groups in which an instance of each class co-occurs with a label
// of that class. Index 0 is the null class (always 0), index c + 1 is class c.
inline std::vector<int> ground_truth_frequency(const GpllDataset& ds) {
  std::vector<int> freq(ds.num_classes + 1, 0);
  for (const auto& g : ds.groups) {
    std::set<ClassId> inst_classes, label_classes;
    for (const auto& x : g.instances)
      if (x.true_class && *x.true_class != kNullClass) inst_classes.insert(*x.true_class);
    for (const auto& l : g.labels) label_classes.insert(l.class_id);
    for (ClassId c : inst_classes)
      if (label_classes.count(c)) ++freq[c + 1];
  }
  return freq;
}

struct DatasetStats {
  std::size_t num_groups = 0;
  std::size_t num_instances = 0;
  std::size_t num_labels = 0;
  int num_classes = 0;
  double null_fraction = 0;
  double cross_fraction = 0;
  std::vector<int> ground_truth_frequency;             // per class [0,C)
  std::vector<std::optional<double>> ambiguity_ratio;  // per class [0,C)
  std::array<std::size_t, 10> ratio_histogram{};       // classes per 0.1-wide bin
  double mean_ambiguity_ratio = 0;                     // over classes with a defined ratio
};

inline std::size_t ratio_bin(double r, std::size_t bins = 10) {
  return std::min(bins - 1, static_cast<std::size_t>(std::floor(r * static_cast<double>(bins))));
}

inline DatasetStats dataset_stats(const GpllDataset& ds) {
  DatasetStats s;
  s.num_groups = ds.groups.size();
  s.num_instances = ds.num_instances();
  s.num_labels = ds.num_labels();
  s.num_classes = ds.num_classes;
  const auto freq = ground_truth_frequency(ds);
  s.ground_truth_frequency.assign(freq.begin() + 1, freq.end());
  if (!ds.has_ground_truth()) return s;

  std::vector<std::set<int>> groups_with_label(ds.num_classes);
  for (const auto& g : ds.groups)
    for (const auto& l : g.labels) groups_with_label[l.class_id].insert(g.group_id);
  std::size_t nulls = 0, crosses = 0;
  for (const auto& g : ds.groups) {
    for (const auto& x : g.instances) {
      const ClassId t = *x.true_class;
      if (t == kNullClass) {
        ++nulls;
        continue;
      }
      const auto& holders = groups_with_label[t];
      if (!holders.count(g.group_id) && !holders.empty()) ++crosses;
    }
  }
  if (s.num_instances > 0) {
    s.null_fraction = static_cast<double>(nulls) / static_cast<double>(s.num_instances);
    s.cross_fraction = static_cast<double>(crosses) / static_cast<double>(s.num_instances);
  }
  const auto counts = class_link_counts(ds);
  double sum = 0;
  std::size_t defined = 0;
  for (int c = 0; c < ds.num_classes; ++c) {
    const auto r = ratio_from_counts(counts[c + 1]);
    s.ambiguity_ratio.push_back(r);
    if (r) {
      ++s.ratio_histogram[ratio_bin(*r)];
      sum += *r;
      ++defined;
    }
  }
  s.mean_ambiguity_ratio = defined ? sum / static_cast<double>(defined) : 0.0;
  return s;
}

}  // namespace dbgae
