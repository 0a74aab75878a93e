#pragma once

// End-to-end runs: generate (or load) -> build-graph -> train -> predict ->
// evaluate, and parameter sweeps over such runs.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbgae/config.hpp"
#include "dbgae/data.hpp"
#include "dbgae/eval.hpp"
#include "dbgae/graph.hpp"
#include "dbgae/inference.hpp"
#include "dbgae/model.hpp"

namespace dbgae {

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline const char* kMethodDbgae = "dbgae";
inline const char* kMethodClusterVoting = "cluster_voting";
inline const char* kMethodPairClustering = "pair_clustering";

// Sub-seeds for the generator and the model come from the global seed.
inline RunConfig resolve_seeds(RunConfig config) {
  config.generator.rng_seed = derive_seed(config.seed, 1);
  config.model.seed = derive_seed(config.seed, 2);
  return config;
}

struct PipelineResult {
  RunConfig resolved;
  DatasetStats stats;
  EvalReport report;
  std::vector<double> loss_trace;
};

struct PipelineOptions {
  bool write_artifacts = true;
  TrainOptions train;
};

inline void write_loss_trace(const std::vector<double>& trace, const std::string& path) {
  std::ostringstream os;
  os << "epoch,loss\n";
  os.precision(17);
  for (std::size_t e = 0; e < trace.size(); ++e) os << e << ',' << trace[e] << '\n';
  write_text_file(path, os.str());
}

template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

// Instance features after the learned transform f_i, for cosine pooling.
inline std::vector<FeatureVector> learned_instance_features(const DualBipartiteGraph& g, const ModelParams& params,
                                                            const ModelConfig& config) {
  ModelParams copy = params;
  const PreparedGraph pg = prepare_graph(g, config);
  const auto fp = build_forward(pg, copy, config);
  const Matrix& f = fp.tape.value(fp.node_features);
  std::vector<FeatureVector> out(g.instances.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].assign(f.row(static_cast<Eigen::Index>(i)).data(), f.row(static_cast<Eigen::Index>(i)).data() + f.cols());
  return out;
}

inline std::vector<Prediction> predict_dbgae(const RatingMatrix& ratings, const DualBipartiteGraph& g,
                                             const ModelParams& params, const ModelConfig& model,
                                             const InferenceConfig& inference) {
  if (inference.cosine_on_raw_features) return pool_labels(ratings, g, inference);
  const auto learned = learned_instance_features(g, params, model);
  return pool_labels(ratings, g, inference, &learned);
}

inline PipelineResult run_pipeline(const RunConfig& input, const PipelineOptions& options = {}) {
  PipelineResult result;
  result.resolved = resolve_seeds(input);
  const RunConfig& cfg = result.resolved;
  run_stage("config", [&] { cfg.validate(); });
  namespace fs = std::filesystem;
  const fs::path dir(cfg.io.out_dir);
  if (options.write_artifacts) {
    run_stage("io", [&] {
      fs::create_directories(dir);
      write_text_file((dir / "resolved_config.json").string(), nlohmann::json(cfg).dump(2) + "\n");
    });
  }
  auto artifact = [&](const char* name) { return (dir / name).string(); };

  const GpllDataset ds = run_stage("generate", [&] {
    GpllDataset d = cfg.io.dataset.empty() ? generate_synthetic(cfg.generator) : load_dataset(cfg.io.dataset);
    if (options.write_artifacts) save_dataset(d, artifact("dataset.jsonl"));
    return d;
  });
  result.stats = run_stage("generate", [&] { return dataset_stats(ds); });

  const DualBipartiteGraph graph = run_stage("build-graph", [&] {
    auto g = build_dual_graph(ds, cfg.graph);
    if (options.write_artifacts) save_graph(g, artifact("graph.jsonl"));
    return g;
  });

  const TrainResult trained = run_stage("train", [&] {
    auto t = train(graph, cfg.model, options.train);
    if (options.write_artifacts) {
      if (cfg.io.save_params) save_params(artifact("params.json"), t.params, cfg.model, graph);
      save_ratings(t.ratings, static_cast<int>(graph.instances.size()), artifact("ratings.jsonl"));
      write_loss_trace(t.loss_trace, artifact("loss_trace.csv"));
    }
    return t;
  });
  result.loss_trace = trained.loss_trace;

  std::vector<std::pair<std::string, std::vector<Prediction>>> predictions = run_stage("predict", [&] {
    std::vector<std::pair<std::string, std::vector<Prediction>>> p;
    p.emplace_back(kMethodDbgae, predict_dbgae(trained.ratings, graph, trained.params, cfg.model, cfg.inference));
    p.emplace_back(kMethodClusterVoting, baseline_cluster_voting(ds, cfg.graph.eps, cfg.graph.min_pts));
    p.emplace_back(kMethodPairClustering, baseline_pair_clustering(ds, cfg.graph.eps, cfg.graph.min_pts));
    if (options.write_artifacts)
      for (const auto& [name, preds] : p)
        save_predictions(preds, name, ds.num_classes, artifact(("predictions_" + name + ".jsonl").c_str()));
    return p;
  });

  result.report = run_stage("evaluate", [&] {
    EvalReport r;
    if (!ds.has_ground_truth()) return r;
    for (const auto& [name, preds] : predictions) r.methods.push_back(evaluate(preds, ds, name, cfg.evaluation));
    if (options.write_artifacts) {
      write_report(r, artifact("report.txt"));
      write_curves(r, artifact("curves.csv"));
    }
    return r;
  });
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  // Dotted config key, or "ablation" with variant names as values.
  std::string parameter;
  std::vector<nlohmann::json> values;
  int replicates = 1;

  void validate() const {
    if (parameter.empty()) throw ConfigError("parameter", "must name a configuration key");
    if (values.empty()) throw ConfigError("values", "need at least one value");
    if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
  }
};

struct SweepRow {
  std::string value;
  int replicate = 0;
  std::string method;
  double accuracy = 0;
  double f1 = 0;
};

struct SweepFailure {
  std::string value;
  int replicate = 0;
  std::string message;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;
};

inline std::string sweep_value_text(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// The configuration of one sweep cell, seed included.
inline RunConfig sweep_cell_config(const SweepSpec& spec, const RunConfig& base, std::size_t value_index, int replicate) {
  RunConfig cfg = base;
  const nlohmann::json& value = spec.values.at(value_index);
  if (spec.parameter == "ablation") {
    cfg.model = apply_variant(cfg.model, value.get<std::string>());
  } else {
    nlohmann::json j = cfg;
    set_dotted(j, spec.parameter, value.dump());
    cfg = run_config_from_json(j);
  }
  cfg.seed = derive_seed(base.seed, value_index, static_cast<std::uint64_t>(replicate));
  cfg.io.out_dir = (std::filesystem::path(base.io.out_dir) /
                    ("v" + std::to_string(value_index) + "_r" + std::to_string(replicate)))
                       .string();
  return cfg;
}

inline SweepResult run_sweep(const SweepSpec& spec, const RunConfig& base, const PipelineOptions& options = {}) {
  spec.validate();
  SweepResult out;
  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    for (int r = 0; r < spec.replicates; ++r) {
      const std::string value = sweep_value_text(spec.values[v]);
      try {
        const auto res = run_pipeline(sweep_cell_config(spec, base, v, r), options);
        for (const auto& m : res.report.methods) out.rows.push_back({value, r, m.method, m.accuracy, m.macro_f1});
      } catch (const std::exception& e) {
        out.failures.push_back({value, r, e.what()});
      }
    }
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "value,replicate,method,accuracy,f1\n";
  os.precision(6);
  for (const auto& row : result.rows)
    os << row.value << ',' << row.replicate << ',' << row.method << ',' << row.accuracy << ',' << row.f1 << '\n';
  return os.str();
}

}  // namespace dbgae
