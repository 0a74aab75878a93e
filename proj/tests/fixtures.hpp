#pragma once

// Small hand-built datasets shared by the unit tests.

#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dbgae/data.hpp"

namespace dbgae::testing {

struct GroupSpec {
  // (features, true class) per instance
  std::vector<std::pair<FeatureVector, ClassId>> instances;
  std::vector<ClassId> labels;
};

inline GpllDataset make_dataset(int num_classes, int feature_dim, const std::vector<GroupSpec>& groups) {
  GpllDataset ds;
  ds.num_classes = num_classes;
  ds.feature_dim = feature_dim;
  int next_id = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Group grp;
    grp.group_id = static_cast<int>(g);
    for (const auto& [x, c] : groups[g].instances) {
      Instance inst;
      inst.instance_id = next_id++;
      inst.group_id = grp.group_id;
      inst.features = x;
      inst.true_class = c;
      grp.instances.push_back(inst);
    }
    for (std::size_t s = 0; s < groups[g].labels.size(); ++s)
      grp.labels.push_back({groups[g].labels[s], grp.group_id, static_cast<int>(s)});
    ds.groups.push_back(std::move(grp));
  }
  return ds;
}

// Every group holds one instance of its class and exactly that class's label.
inline GpllDataset unambiguous_dataset(int num_classes, int feature_dim, int repeats, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<FeatureVector> protos(num_classes, FeatureVector(feature_dim));
  for (auto& p : protos)
    for (auto& v : p) v = 6.0 / std::sqrt(static_cast<double>(feature_dim)) * normal(rng);
  std::vector<GroupSpec> groups;
  for (int r = 0; r < repeats; ++r)
    for (int c = 0; c < num_classes; ++c) {
      FeatureVector x = protos[c];
      for (auto& v : x) v += 0.05 * normal(rng);
      groups.push_back({{{x, c}}, {c}});
    }
  return make_dataset(num_classes, feature_dim, groups);
}

inline std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dbgae_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace dbgae::testing
