#pragma once

// Named-tensor checkpoints as versioned JSON:
//   {"format":"dbgae-params","version":1,"meta":{...},
//    "tensors":[{"name":..,"rows":..,"cols":..,"data":[row-major values]}]}

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dbgae/autodiff.hpp"

namespace dbgae {

struct NamedTensor {
  std::string name;
  Matrix value;
};

inline nlohmann::json tensors_to_json(const std::vector<NamedTensor>& tensors, nlohmann::json meta = {}) {
  nlohmann::json j = {{"format", "dbgae-params"}, {"version", 1}, {"meta", std::move(meta)}};
  auto& arr = j["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors) {
    std::vector<double> data(t.value.data(), t.value.data() + t.value.size());
    arr.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"data", std::move(data)}});
  }
  return j;
}

inline std::vector<NamedTensor> tensors_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "dbgae-params") throw ParseError(0, "not a dbgae-params checkpoint");
  if (j.value("version", 0) != 1) throw ParseError(0, "unsupported checkpoint version");
  std::vector<NamedTensor> out;
  for (const auto& t : j.at("tensors")) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    const auto data = t.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw SchemaError("tensor " + t.at("name").get<std::string>() + ": data length does not match shape");
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    out.push_back({t.at("name").get<std::string>(), std::move(m)});
  }
  return out;
}

inline void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors, nlohmann::json meta = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << tensors_to_json(tensors, std::move(meta)).dump() << '\n';
}

inline std::pair<std::vector<NamedTensor>, nlohmann::json> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, std::string("invalid checkpoint JSON: ") + e.what());
  }
  return {tensors_from_json(j), j.value("meta", nlohmann::json::object())};
}

}  // namespace dbgae
