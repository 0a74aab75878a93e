#pragma once

// Per-instance label decisions: class pooling over refined link likelihoods,
// and the two clustering baselines.

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbgae/dbscan.hpp"
#include "dbgae/graph.hpp"
#include "dbgae/model.hpp"

namespace dbgae {

struct InferenceConfig {
  // Pooled link evidence is max(0, z - tau).
  double tau = 0.5;
  // Cosine similarity for cross edges on raw features; false uses the learned
  // instance transform f_i.
  bool cosine_on_raw_features = true;

  void validate() const {
    if (!(tau >= 0 && tau <= 1)) throw ConfigError("tau", "must be in [0,1]");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InferenceConfig, tau, cosine_on_raw_features)

struct Prediction {
  int instance_id = 0;
  ClassId predicted = kNullClass;
  std::vector<double> scores;  // pooled score per class; empty for baselines
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Lowest class with the largest strictly positive score, or null.
inline ClassId argmax_positive(const std::vector<double>& scores) {
  ClassId best = kNullClass;
  double best_score = 0;
  for (int c = 0; c < static_cast<int>(scores.size()); ++c) {
    if (scores[c] > best_score) {
      best = c;
      best_score = scores[c];
    }
  }
  return best;
}

// W_o^i = sum over within edges to class o of relu(M_ij - tau)
//       + sum over cross edges to class o of relu(M_ij' * cos(x_i, x_via) - tau).
// `cosine_features` overrides the raw instance features used for cosine.
inline std::vector<Prediction> pool_labels(const RatingMatrix& ratings, const DualBipartiteGraph& g,
                                           const InferenceConfig& config = {},
                                           const std::vector<FeatureVector>* cosine_features = nullptr) {
  config.validate();
  const std::size_t n = g.instances.size();
  auto features = [&](int i) -> const FeatureVector& {
    return cosine_features ? (*cosine_features)[i] : g.instances[i].features;
  };
  std::vector<Prediction> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].instance_id = g.instances[i].instance_id;
    out[i].scores.assign(g.num_classes, 0.0);
  }
  for (std::size_t e = 0; e < ratings.edges.size(); ++e) {
    const auto& edge = ratings.edges[e];
    double z = ratings.m_hat[e];
    if (edge.kind == EdgeKind::kCross) z *= cosine_similarity(features(edge.instance), features(edge.via));
    const double s = std::max(0.0, z - config.tau);
    out[edge.instance].scores[g.labels[edge.label].class_id] += s;
  }
  for (auto& p : out) p.predicted = argmax_positive(p.scores);
  return out;
}

// Majority vote over the candidate labels of every group that holds a member
// of the instance's feature cluster (each group counted once). Noise
// instances vote with their own group only. Ties go to the lowest class.
inline std::vector<Prediction> baseline_cluster_voting(const GpllDataset& ds, double eps, int min_pts) {
  std::vector<FeatureVector> points;
  std::vector<int> group_of;
  for (const auto& g : ds.groups)
    for (const auto& x : g.instances) {
      points.push_back(x.features);
      group_of.push_back(g.group_id);
    }
  const auto clusters = dbscan(points, eps, min_pts);
  std::vector<std::set<int>> cluster_groups(clusters.cluster_sizes.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    if (clusters.labels[i] != ClusterAssignment::kNoise) cluster_groups[clusters.labels[i]].insert(group_of[i]);

  auto vote = [&](const std::set<int>& groups) {
    std::vector<int> votes(ds.num_classes, 0);
    for (int g : groups)
      for (const auto& l : ds.groups[g].labels) ++votes[l.class_id];
    ClassId best = kNullClass;
    int best_votes = 0;
    for (int c = 0; c < ds.num_classes; ++c)
      if (votes[c] > best_votes) best = c, best_votes = votes[c];
    return best;
  };

  std::vector<Prediction> out;
  std::size_t i = 0;
  for (const auto& g : ds.groups)
    for (const auto& x : g.instances) {
      const int cl = clusters.labels[i++];
      const ClassId c = cl == ClusterAssignment::kNoise ? vote({g.group_id}) : vote(cluster_groups[cl]);
      out.push_back({x.instance_id, c, {}});
    }
  return out;
}

// The within-group link with the largest co-occurrence cluster; ties go to
// the lowest label class.
inline std::vector<Prediction> baseline_pair_clustering(const GpllDataset& ds, double eps, int min_pts) {
  const auto links = count_cooccurrence(ds, eps, min_pts);
  const DualBipartiteGraph nodes = graph_nodes(ds);
  std::vector<int> best_count(nodes.instances.size(), 0);
  std::vector<ClassId> best_class(nodes.instances.size(), kNullClass);
  for (const auto& l : links) {
    const ClassId c = nodes.labels[l.label].class_id;
    if (l.count > best_count[l.instance] || (l.count == best_count[l.instance] && c < best_class[l.instance])) {
      best_count[l.instance] = l.count;
      best_class[l.instance] = c;
    }
  }
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < nodes.instances.size(); ++i) out.push_back({nodes.instances[i].instance_id, best_class[i], {}});
  return out;
}

// Predictions file: header {"format":"dbgae-predictions","method":...,
// "num_classes":...}, then {"instance_id","pred","scores"?} per instance.
// pred is -1 for the null class.
inline void save_predictions(const std::vector<Prediction>& preds, const std::string& method, int num_classes,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << nlohmann::json{{"format", "dbgae-predictions"}, {"method", method}, {"num_classes", num_classes}}.dump() << '\n';
  for (const auto& p : preds) {
    nlohmann::json j = {{"instance_id", p.instance_id}, {"pred", p.predicted}};
    if (!p.scores.empty()) j["scores"] = p.scores;
    out << j.dump() << '\n';
  }
}

struct PredictionFile {
  std::string method;
  std::vector<Prediction> predictions;
};

inline PredictionFile load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  PredictionFile pf;
  std::string text;
  std::size_t line_no = 0;
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
      if (line_no == 1) {
        if (j.value("format", "") != "dbgae-predictions") throw ParseError(line_no, "missing dbgae-predictions header");
        pf.method = j.at("method").get<std::string>();
        continue;
      }
      Prediction p;
      p.instance_id = j.at("instance_id").get<int>();
      p.predicted = j.at("pred").get<int>();
      if (j.contains("scores")) p.scores = j.at("scores").get<std::vector<double>>();
      pf.predictions.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad record: ") + e.what());
  }
  if (line_no == 0) throw ParseError(0, "empty predictions file");
  return pf;
}

}  // namespace dbgae
