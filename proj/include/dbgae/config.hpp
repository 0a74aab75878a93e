#pragma once

// Run configuration: one JSON document with a section per pipeline stage.
// Every key has a default; unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "dbgae/data.hpp"
#include "dbgae/eval.hpp"
#include "dbgae/graph.hpp"
#include "dbgae/inference.hpp"
#include "dbgae/model.hpp"

namespace dbgae {

struct IoConfig {
  std::string out_dir = "run";
  // Existing dataset file; empty means generate a synthetic one.
  std::string dataset;
  bool save_params = true;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(IoConfig, out_dir, dataset, save_params)

struct RunConfig {
  std::uint64_t seed = 7;
  GeneratorConfig generator;
  GraphConfig graph;
  ModelConfig model;
  InferenceConfig inference;
  EvalConfig evaluation;
  IoConfig io;

  void validate() const {
    generator.validate();
    graph.validate();
    model.validate();
    inference.validate();
    evaluation.validate();
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, seed, generator, graph, model, inference, evaluation, io)

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ (a + 1)) ^ (b + 0x51ed27));
}

namespace detail {

inline void check_known_keys(const nlohmann::json& input, const nlohmann::json& reference, const std::string& path) {
  if (!input.is_object()) return;
  for (const auto& [key, value] : input.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ConfigError(here, "unknown configuration key");
    if (value.is_object() && reference.at(key).is_object()) check_known_keys(value, reference.at(key), here);
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  nlohmann::json merged = RunConfig{};
  detail::check_known_keys(j, merged, "");
  merged.merge_patch(j);
  RunConfig c;
  try {
    c = merged.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", std::string("type error: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("config ") + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

// Sets a dotted key ("model.epochs") from text. Values that parse as JSON are
// used as such; anything else is taken as a string.
inline void set_dotted(nlohmann::json& j, const std::string& dotted, const std::string& text) {
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError(dotted, "unknown configuration key");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline RunConfig with_override(const RunConfig& base, const std::string& dotted, const std::string& text) {
  nlohmann::json j = base;
  set_dotted(j, dotted, text);
  return run_config_from_json(j);
}

}  // namespace dbgae
