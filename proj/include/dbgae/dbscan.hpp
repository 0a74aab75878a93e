#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "dbgae/data.hpp"

namespace dbgae {

struct ClusterAssignment {
  static constexpr int kNoise = -1;
  std::vector<int> labels;                // per point; kNoise or cluster id
  std::vector<std::size_t> cluster_sizes; // indexed by cluster id

  std::size_t noise_count() const {
    std::size_t n = 0;
    for (int l : labels) n += (l == kNoise);
    return n;
  }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

// Exact DBSCAN with a Euclidean metric. A point is core when at least
// min_pts points (itself included) lie within eps. Points are visited in
// ascending index order and a border point joins the first cluster that
// reaches it, which makes the result deterministic.
inline ClusterAssignment dbscan(std::span<const FeatureVector> points, double eps, int min_pts) {
  if (!(eps > 0)) throw ConfigError("eps", "must be > 0");
  if (min_pts < 1) throw ConfigError("min_pts", "must be >= 1");
  const std::size_t n = points.size();
  const double eps2 = eps * eps;

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbors[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (squared_distance(points[i], points[j]) <= eps2) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
    }
  }
  auto is_core = [&](std::size_t i) { return neighbors[i].size() >= static_cast<std::size_t>(min_pts); };

  constexpr int kUnvisited = -2;
  ClusterAssignment out;
  out.labels.assign(n, kUnvisited);
  for (std::size_t p = 0; p < n; ++p) {
    if (out.labels[p] != kUnvisited) continue;
    if (!is_core(p)) {
      out.labels[p] = ClusterAssignment::kNoise;
      continue;
    }
    const int id = static_cast<int>(out.cluster_sizes.size());
    out.cluster_sizes.push_back(0);
    std::deque<std::size_t> frontier{p};
    out.labels[p] = id;
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      ++out.cluster_sizes[id];
      if (!is_core(q)) continue;
      for (std::size_t r : neighbors[q]) {
        if (out.labels[r] == kUnvisited || out.labels[r] == ClusterAssignment::kNoise) {
          out.labels[r] = id;
          frontier.push_back(r);
        }
      }
    }
  }
  return out;
}

}  // namespace dbgae
