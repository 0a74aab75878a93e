#pragma once

// Accuracy, macro-F1 and condition-controlled breakdowns (by ambiguity ratio
// and by ground-truth frequency of each instance's true class).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbgae/data.hpp"
#include "dbgae/inference.hpp"

namespace dbgae {

struct EvalConfig {
  int ambiguity_bins = 10;
  // Upper edges of the closed frequency bins; a final open bin follows.
  // {7, 14} gives [0,7], [8,14], [15,inf).
  std::vector<int> frequency_edges{7, 14};

  void validate() const {
    if (ambiguity_bins < 1) throw ConfigError("ambiguity_bins", "must be >= 1");
    for (std::size_t k = 1; k < frequency_edges.size(); ++k)
      if (frequency_edges[k] <= frequency_edges[k - 1]) throw ConfigError("frequency_edges", "must be increasing");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, ambiguity_bins, frequency_edges)

struct BinMetrics {
  double low = 0, high = 0;
  std::size_t n = 0;
  std::optional<double> accuracy, f1;
};

struct MethodMetrics {
  std::string method;
  std::size_t n = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  std::vector<BinMetrics> ambiguity_bins;
  std::vector<BinMetrics> frequency_bins;
};

struct EvalReport {
  std::vector<MethodMetrics> methods;
  const MethodMetrics* find(const std::string& name) const {
    for (const auto& m : methods)
      if (m.method == name) return &m;
    return nullptr;
  }
};

struct Scored {
  ClassId truth;
  ClassId predicted;
};

inline double accuracy_of(const std::vector<Scored>& xs) {
  if (xs.empty()) return 0;
  std::size_t ok = 0;
  for (const auto& x : xs) ok += (x.truth == x.predicted);
  return static_cast<double>(ok) / static_cast<double>(xs.size());
}

// Unweighted mean of per-class F1 over every class (null included) that
// occurs as a target or a prediction.
inline double macro_f1_of(const std::vector<Scored>& xs) {
  std::map<ClassId, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (const auto& x : xs) {
    if (x.truth == x.predicted) {
      ++counts[x.truth][0];
    } else {
      ++counts[x.predicted][1];
      ++counts[x.truth][2];
    }
  }
  if (counts.empty()) return 0;
  double sum = 0;
  for (const auto& [c, k] : counts) {
    const double denom = 2.0 * k[0] + k[1] + k[2];
    sum += denom > 0 ? 2.0 * k[0] / denom : 0.0;
  }
  return sum / static_cast<double>(counts.size());
}

// Ambiguity ratio per class, index 0 for null; classes without candidate
// links are placed at 1.0.
inline std::vector<double> instance_class_ratios(const GpllDataset& ds) {
  const auto counts = class_link_counts(ds);
  std::vector<double> out;
  for (const auto& c : counts) out.push_back(ratio_from_counts(c).value_or(1.0));
  return out;
}

inline MethodMetrics evaluate(const std::vector<Prediction>& predictions, const GpllDataset& ds,
                              const std::string& method = "method", const EvalConfig& config = {}) {
  config.validate();
  if (!ds.has_ground_truth()) throw ContractError("evaluate: dataset lacks ground truth");
  std::map<int, ClassId> predicted;
  for (const auto& p : predictions) predicted[p.instance_id] = p.predicted;

  const auto ratios = instance_class_ratios(ds);
  const auto freq = ground_truth_frequency(ds);
  const std::size_t n_freq_bins = config.frequency_edges.size() + 1;
  std::vector<Scored> all;
  std::vector<std::vector<Scored>> amb(config.ambiguity_bins), fq(n_freq_bins);
  for (const auto& g : ds.groups) {
    for (const auto& x : g.instances) {
      const auto it = predicted.find(x.instance_id);
      if (it == predicted.end()) throw SchemaError("no prediction for instance " + std::to_string(x.instance_id));
      const Scored s{*x.true_class, it->second};
      all.push_back(s);
      amb[ratio_bin(ratios[s.truth + 1], config.ambiguity_bins)].push_back(s);
      const int f = freq[s.truth + 1];
      std::size_t b = 0;
      while (b < config.frequency_edges.size() && f > config.frequency_edges[b]) ++b;
      fq[b].push_back(s);
    }
  }

  MethodMetrics m;
  m.method = method;
  m.n = all.size();
  m.accuracy = accuracy_of(all);
  m.macro_f1 = macro_f1_of(all);
  auto bin = [](double lo, double hi, const std::vector<Scored>& xs) {
    BinMetrics b{lo, hi, xs.size(), std::nullopt, std::nullopt};
    if (!xs.empty()) {
      b.accuracy = accuracy_of(xs);
      b.f1 = macro_f1_of(xs);
    }
    return b;
  };
  for (int k = 0; k < config.ambiguity_bins; ++k)
    m.ambiguity_bins.push_back(bin(static_cast<double>(k) / config.ambiguity_bins,
                                   static_cast<double>(k + 1) / config.ambiguity_bins, amb[k]));
  for (std::size_t k = 0; k < n_freq_bins; ++k) {
    const double lo = k == 0 ? 0.0 : config.frequency_edges[k - 1] + 1.0;
    const double hi = k < config.frequency_edges.size() ? config.frequency_edges[k] : std::numeric_limits<double>::infinity();
    m.frequency_bins.push_back(bin(lo, hi, fq[k]));
  }
  return m;
}

// Accuracy over the instances in bins lying entirely inside [lo, hi].
inline std::optional<double> pooled_bin_accuracy(const std::vector<BinMetrics>& bins, double lo, double hi) {
  double correct = 0;
  std::size_t n = 0;
  for (const auto& b : bins) {
    if (b.low < lo - 1e-12 || b.high > hi + 1e-12 || !b.accuracy) continue;
    correct += *b.accuracy * static_cast<double>(b.n);
    n += b.n;
  }
  if (n == 0) return std::nullopt;
  return correct / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "nan"; }

inline std::string report_text(const EvalReport& report) {
  std::ostringstream os;
  os << "# accuracy counts null targets; macro_f1 averages per-class F1 over all classes (null included)\n";
  os << "# that occur as a target or a prediction\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %8s %10s %10s\n", "method", "n", "accuracy", "macro_f1");
  os << line;
  for (const auto& m : report.methods) {
    std::snprintf(line, sizeof line, "%-20s %8zu %10.4f %10.4f\n", m.method.c_str(), m.n, m.accuracy, m.macro_f1);
    os << line;
  }
  return os.str();
}

inline nlohmann::json bins_json(const std::vector<BinMetrics>& bins) {
  auto arr = nlohmann::json::array();
  for (const auto& b : bins) {
    nlohmann::json j = {{"low", b.low}, {"n", b.n}};
    j["high"] = std::isinf(b.high) ? nlohmann::json(nullptr) : nlohmann::json(b.high);
    j["accuracy"] = b.accuracy ? nlohmann::json(*b.accuracy) : nlohmann::json(nullptr);
    j["f1"] = b.f1 ? nlohmann::json(*b.f1) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json j = {{"f1_variant", "macro over classes including null"}};
  auto& methods = j["methods"] = nlohmann::json::array();
  for (const auto& m : report.methods)
    methods.push_back({{"method", m.method},
                       {"n", m.n},
                       {"accuracy", m.accuracy},
                       {"macro_f1", m.macro_f1},
                       {"ambiguity_bins", bins_json(m.ambiguity_bins)},
                       {"frequency_bins", bins_json(m.frequency_bins)}});
  return j;
}

// CSV columns: method, bin_low, bin_high, n, accuracy, f1.
inline std::string curves_csv(const EvalReport& report, bool frequency) {
  std::ostringstream os;
  os << "method,bin_low,bin_high,n,accuracy,f1\n";
  for (const auto& m : report.methods)
    for (const auto& b : frequency ? m.frequency_bins : m.ambiguity_bins)
      os << m.method << ',' << format_number(b.low) << ',' << format_number(b.high) << ',' << b.n << ','
         << format_optional(b.accuracy) << ',' << format_optional(b.f1) << '\n';
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

// Writes report text at `report_path` and its JSON record at report_path + ".json".
inline void write_report(const EvalReport& report, const std::string& report_path) {
  write_text_file(report_path, report_text(report));
  write_text_file(report_path + ".json", report_json(report).dump(2) + "\n");
}

// Ambiguity curves at `path`; frequency curves next to it with a
// "_frequency" suffix before the extension.
inline std::string frequency_curves_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "_frequency";
  return path.substr(0, dot) + "_frequency" + path.substr(dot);
}

inline void write_curves(const EvalReport& report, const std::string& path) {
  write_text_file(path, curves_csv(report, false));
  write_text_file(frequency_curves_path(path), curves_csv(report, true));
}

}  // namespace dbgae
