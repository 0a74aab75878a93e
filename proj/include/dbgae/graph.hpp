#pragma once

// Dual bipartite graph construction: co-occurrence counting by clustering
// instance-label link tuples, contradictory-link normalization of the
// within-group weights, and cross-group links induced through homogeneous
// neighbours.

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbgae/data.hpp"
#include "dbgae/dbscan.hpp"

namespace dbgae {

struct GraphConfig {
  double eps = 1.0;
  int min_pts = 2;
  double threshold = 1.0;

  void validate() const {
    if (!(eps > 0)) throw ConfigError("eps", "must be > 0");
    if (min_pts < 1) throw ConfigError("min_pts", "must be >= 1");
    if (!(threshold >= 0)) throw ConfigError("threshold", "must be >= 0");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GraphConfig, eps, min_pts, threshold)

struct InstanceNode {
  int instance_id = 0;
  int group_id = 0;
  FeatureVector features;
  friend bool operator==(const InstanceNode&, const InstanceNode&) = default;
};

struct LabelNode {
  ClassId class_id = 0;
  int group_id = 0;
  int slot = 0;
  friend bool operator==(const LabelNode&, const LabelNode&) = default;
};

// Instance and label indices refer to positions in the graph's node arrays,
// which follow dataset order (group by group).
struct WithinLink {
  int instance = 0;
  int label = 0;
  int count = 1;
  friend bool operator==(const WithinLink&, const WithinLink&) = default;
};

struct WithinEdge {
  int instance = 0;
  int label = 0;
  double weight = 0;
  int count = 1;
  friend bool operator==(const WithinEdge&, const WithinEdge&) = default;
};

struct WithinGraph {
  std::vector<WithinEdge> edges;
  std::vector<char> observed;  // observation mask, parallel to edges
  friend bool operator==(const WithinGraph&, const WithinGraph&) = default;
};

struct CrossEdge {
  int instance = 0;
  int label = 0;
  double weight = 0;
  int via = 0;  // homogeneous neighbour whose within edge induced this one
  friend bool operator==(const CrossEdge&, const CrossEdge&) = default;
};

struct CrossGraph {
  std::vector<CrossEdge> edges;
  friend bool operator==(const CrossGraph&, const CrossGraph&) = default;
};

struct DualBipartiteGraph {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<InstanceNode> instances;
  std::vector<LabelNode> labels;
  WithinGraph within;
  CrossGraph cross;

  std::size_t num_nodes() const { return instances.size() + labels.size(); }
  // Global node ids: instances first, then labels.
  int label_node_id(int label) const { return static_cast<int>(instances.size()) + label; }

  friend bool operator==(const DualBipartiteGraph&, const DualBipartiteGraph&) = default;
};

// Instance and label nodes of a dataset in canonical order.
inline DualBipartiteGraph graph_nodes(const GpllDataset& ds) {
  DualBipartiteGraph g;
  g.num_classes = ds.num_classes;
  g.feature_dim = ds.feature_dim;
  for (const auto& grp : ds.groups) {
    for (const auto& x : grp.instances) g.instances.push_back({x.instance_id, grp.group_id, x.features});
    for (const auto& l : grp.labels) g.labels.push_back({l.class_id, grp.group_id, l.slot});
  }
  return g;
}

inline FeatureVector link_tuple_feature(const FeatureVector& x, ClassId label_class, int num_classes) {
  FeatureVector t(x);
  t.resize(x.size() + num_classes, 0.0);
  t[x.size() + label_class] = 1.0;
  return t;
}

// Every within-group instance x label pair with c = size of the DBSCAN cluster
// holding its [x ; onehot(l)] tuple, or 1 for noise tuples.
inline std::vector<WithinLink> count_cooccurrence(const GpllDataset& ds, double eps, int min_pts) {
  std::vector<WithinLink> links;
  std::vector<FeatureVector> tuples;
  int inst_base = 0, label_base = 0;
  for (const auto& grp : ds.groups) {
    for (std::size_t m = 0; m < grp.instances.size(); ++m) {
      for (std::size_t n = 0; n < grp.labels.size(); ++n) {
        links.push_back({inst_base + static_cast<int>(m), label_base + static_cast<int>(n), 1});
        tuples.push_back(link_tuple_feature(grp.instances[m].features, grp.labels[n].class_id, ds.num_classes));
      }
    }
    inst_base += static_cast<int>(grp.instances.size());
    label_base += static_cast<int>(grp.labels.size());
  }
  const auto clusters = dbscan(tuples, eps, min_pts);
  for (std::size_t t = 0; t < links.size(); ++t) {
    const int id = clusters.labels[t];
    links[t].count = id == ClusterAssignment::kNoise ? 1 : static_cast<int>(clusters.cluster_sizes[id]);
  }
  return links;
}

// w_ij = c_ij / (sum_u c_iu + sum_v c_vj - c_ij). Both sums run over the links
// of the same group at instance i and at label j, c_ij included.
inline WithinGraph within_weights(const std::vector<WithinLink>& links) {
  std::map<int, double> at_instance, at_label;
  for (const auto& l : links) {
    at_instance[l.instance] += l.count;
    at_label[l.label] += l.count;
  }
  WithinGraph g;
  g.edges.reserve(links.size());
  for (const auto& l : links) {
    const double denom = at_instance[l.instance] + at_label[l.label] - l.count;
    g.edges.push_back({l.instance, l.label, l.count / denom, l.count});
  }
  g.observed.assign(g.edges.size(), 1);
  return g;
}

// Cross-group instance pairs within `threshold` (closed) Euclidean distance.
// Lists are sorted ascending and symmetric.
inline std::vector<std::vector<int>> homogeneous_neighbors(const GpllDataset& ds, double threshold) {
  if (!(threshold >= 0)) throw ConfigError("threshold", "must be >= 0");
  std::vector<const Instance*> flat;
  for (const auto& grp : ds.groups)
    for (const auto& x : grp.instances) flat.push_back(&x);
  std::vector<std::vector<int>> out(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    for (std::size_t j = i + 1; j < flat.size(); ++j) {
      if (flat[i]->group_id == flat[j]->group_id) continue;
      if (euclidean_distance(flat[i]->features, flat[j]->features) <= threshold) {
        out[i].push_back(static_cast<int>(j));
        out[j].push_back(static_cast<int>(i));
      }
    }
  }
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

// Each instance inherits the within edges of its homogeneous neighbours.
// Duplicate (instance, label) pairs keep the largest weight; on equal weights
// the lowest-index neighbour wins.
inline CrossGraph cross_links(const WithinGraph& within, const std::vector<std::vector<int>>& neighbors) {
  std::vector<std::vector<std::size_t>> edges_of(neighbors.size());
  for (std::size_t e = 0; e < within.edges.size(); ++e) {
    const auto inst = static_cast<std::size_t>(within.edges[e].instance);
    if (inst >= edges_of.size()) edges_of.resize(inst + 1);
    edges_of[inst].push_back(e);
  }
  CrossGraph out;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    std::map<int, CrossEdge> best;
    for (int nb : neighbors[i]) {
      if (static_cast<std::size_t>(nb) >= edges_of.size()) continue;
      for (std::size_t e : edges_of[nb]) {
        const auto& we = within.edges[e];
        auto it = best.find(we.label);
        if (it == best.end())
          best.emplace(we.label, CrossEdge{static_cast<int>(i), we.label, we.weight, nb});
        else if (we.weight > it->second.weight)
          it->second = CrossEdge{static_cast<int>(i), we.label, we.weight, nb};
      }
    }
    for (auto& [label, edge] : best) out.edges.push_back(edge);
  }
  return out;
}

inline DualBipartiteGraph build_dual_graph(const GpllDataset& ds, const GraphConfig& config) {
  config.validate();
  DualBipartiteGraph g = graph_nodes(ds);
  g.within = within_weights(count_cooccurrence(ds, config.eps, config.min_pts));
  g.cross = cross_links(g.within, homogeneous_neighbors(ds, config.threshold));
  return g;
}

// ---------------------------------------------------------------------------
// Graph file: JSON Lines. A header line, then "nodes" records, then "edges"
// records whose src is the instance node id and dst the label node id.

inline void write_graph(const DualBipartiteGraph& g, std::ostream& out) {
  out << nlohmann::json{{"format", "dbgae-graph"},
                        {"version", 1},
                        {"num_classes", g.num_classes},
                        {"feature_dim", g.feature_dim},
                        {"num_instances", g.instances.size()},
                        {"num_labels", g.labels.size()}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < g.instances.size(); ++i) {
    const auto& n = g.instances[i];
    out << nlohmann::json{{"section", "nodes"}, {"id", i},           {"type", "instance"},
                          {"instance_id", n.instance_id}, {"group_id", n.group_id}, {"features", n.features}}
               .dump()
        << '\n';
  }
  for (std::size_t j = 0; j < g.labels.size(); ++j) {
    const auto& n = g.labels[j];
    out << nlohmann::json{{"section", "nodes"}, {"id", g.label_node_id(static_cast<int>(j))}, {"type", "label"},
                          {"class_id", n.class_id}, {"group_id", n.group_id}, {"slot", n.slot}}
               .dump()
        << '\n';
  }
  for (std::size_t e = 0; e < g.within.edges.size(); ++e) {
    const auto& w = g.within.edges[e];
    out << nlohmann::json{{"section", "edges"}, {"src", w.instance},  {"dst", g.label_node_id(w.label)}, {"w", w.weight},
                          {"kind", "within"},   {"c", w.count}, {"observed", g.within.observed[e] != 0}}
               .dump()
        << '\n';
  }
  for (const auto& c : g.cross.edges) {
    out << nlohmann::json{{"section", "edges"}, {"src", c.instance}, {"dst", g.label_node_id(c.label)},
                          {"w", c.weight},      {"kind", "cross"},   {"via", c.via}}
               .dump()
        << '\n';
  }
}

inline DualBipartiteGraph read_graph(std::istream& in) {
  DualBipartiteGraph g;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t n_inst = 0, n_lab = 0;
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
      if (!have_header) {
        if (j.value("format", "") != "dbgae-graph") throw ParseError(line_no, "missing dbgae-graph header");
        g.num_classes = j.at("num_classes").get<int>();
        g.feature_dim = j.at("feature_dim").get<int>();
        n_inst = j.at("num_instances").get<std::size_t>();
        n_lab = j.at("num_labels").get<std::size_t>();
        g.instances.resize(n_inst);
        g.labels.resize(n_lab);
        have_header = true;
        continue;
      }
      const std::string section = j.at("section").get<std::string>();
      if (section == "nodes") {
        const auto id = j.at("id").get<std::size_t>();
        if (j.at("type") == "instance") {
          if (id >= n_inst) throw ParseError(line_no, "instance node id out of range");
          g.instances[id] = {j.at("instance_id").get<int>(), j.at("group_id").get<int>(),
                             j.at("features").get<FeatureVector>()};
          if (static_cast<int>(g.instances[id].features.size()) != g.feature_dim)
            throw SchemaError("line " + std::to_string(line_no) + ": feature dimension mismatch");
        } else {
          if (id < n_inst || id >= n_inst + n_lab) throw ParseError(line_no, "label node id out of range");
          g.labels[id - n_inst] = {j.at("class_id").get<int>(), j.at("group_id").get<int>(), j.at("slot").get<int>()};
        }
      } else if (section == "edges") {
        const int src = j.at("src").get<int>();
        const int dst = j.at("dst").get<int>() - static_cast<int>(n_inst);
        if (src < 0 || static_cast<std::size_t>(src) >= n_inst || dst < 0 || static_cast<std::size_t>(dst) >= n_lab)
          throw ParseError(line_no, "edge endpoint does not exist");
        const double w = j.at("w").get<double>();
        if (j.at("kind") == "within") {
          g.within.edges.push_back({src, dst, w, j.value("c", 1)});
          g.within.observed.push_back(j.value("observed", true) ? 1 : 0);
        } else {
          g.cross.edges.push_back({src, dst, w, j.at("via").get<int>()});
        }
      } else {
        throw ParseError(line_no, "unknown section '" + section + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad record: ") + e.what());
  }
  if (!have_header) throw ParseError(line_no, "empty graph file");
  return g;
}

inline void save_graph(const DualBipartiteGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_graph(g, out);
}

inline DualBipartiteGraph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return read_graph(in);
}

}  // namespace dbgae
