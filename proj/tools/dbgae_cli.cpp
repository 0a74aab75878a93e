// Command-line front end: one subcommand per pipeline stage plus `pipeline`
// and `sweep`. Every subcommand accepts --config, --set key=value (dotted
// config keys), --seed and --out-dir.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbgae/dbgae.hpp"

namespace {

using namespace dbgae;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override a config key, e.g. --set model.epochs=200");
  cmd->add_option("--seed", opts.seed, "Global seed");
  cmd->add_option("--out-dir", opts.out_dir, "Output directory");
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_run_config(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "override must look like key=value");
    cfg = with_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out_dir.empty()) cfg.io.out_dir = opts.out_dir;
  cfg.validate();
  return resolve_seeds(cfg);
}

std::string in_out_dir(const RunConfig& cfg, const std::string& explicit_path, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  fs::create_directories(cfg.io.out_dir);
  return (fs::path(cfg.io.out_dir) / name).string();
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::vector<nlohmann::json> parse_values(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(nlohmann::json::parse(item));
    } catch (const nlohmann::json::parse_error&) {
      out.emplace_back(item);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DB-GAE: dual bipartite graph autoencoder for general partial label learning"};
  app.require_subcommand(1);
  std::string stage = "cli";
  std::function<void()> action;

  // generate
  CommonOptions gen_opts;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  add_common(gen, gen_opts);
  gen->add_option("--out", gen_out, "Dataset file (default <out-dir>/dataset.jsonl)");
  gen->callback([&] {
    stage = "generate";
    action = [&] {
      const RunConfig cfg = resolve_config(gen_opts);
      const auto path = in_out_dir(cfg, gen_out, "dataset.jsonl");
      ensure_parent(path);
      const auto ds = generate_synthetic(cfg.generator);
      save_dataset(ds, path);
      const auto stats = dataset_stats(ds);
      std::cout << "wrote " << path << ": " << stats.num_instances << " instances, mean ambiguity ratio "
                << format_number(stats.mean_ambiguity_ratio) << "\n";
    };
  });

  // build-graph
  CommonOptions bg_opts;
  std::string bg_in, bg_out;
  std::optional<double> bg_eps, bg_threshold;
  std::optional<int> bg_min_pts;
  auto* bg = app.add_subcommand("build-graph", "Build the dual bipartite graph of a dataset");
  add_common(bg, bg_opts);
  bg->add_option("--in", bg_in, "Dataset file")->required();
  bg->add_option("--out", bg_out, "Graph file (default <out-dir>/graph.jsonl)");
  bg->add_option("--eps", bg_eps, "DBSCAN radius over link tuples");
  bg->add_option("--min-pts", bg_min_pts, "DBSCAN core size");
  bg->add_option("--threshold", bg_threshold, "Homogeneous-neighbour distance");
  bg->callback([&] {
    stage = "build-graph";
    action = [&] {
      RunConfig cfg = resolve_config(bg_opts);
      if (bg_eps) cfg.graph.eps = *bg_eps;
      if (bg_min_pts) cfg.graph.min_pts = *bg_min_pts;
      if (bg_threshold) cfg.graph.threshold = *bg_threshold;
      cfg.graph.validate();
      const auto ds = load_dataset(bg_in);
      const auto g = build_dual_graph(ds, cfg.graph);
      const auto path = in_out_dir(cfg, bg_out, "graph.jsonl");
      ensure_parent(path);
      save_graph(g, path);
      std::cout << "wrote " << path << ": " << g.within.edges.size() << " within edges, " << g.cross.edges.size()
                << " cross edges\n";
    };
  });

  // train
  CommonOptions tr_opts;
  std::string tr_graph, tr_params, tr_ratings, tr_trace;
  auto* tr = app.add_subcommand("train", "Train the autoencoder on a graph");
  add_common(tr, tr_opts);
  tr->add_option("--graph", tr_graph, "Graph file")->required();
  tr->add_option("--out-params", tr_params, "Parameter checkpoint (default <out-dir>/params.json)");
  tr->add_option("--out-ratings", tr_ratings, "Ratings file (default <out-dir>/ratings.jsonl)");
  tr->add_option("--loss-trace", tr_trace, "Loss trace CSV (default <out-dir>/loss_trace.csv)");
  tr->callback([&] {
    stage = "train";
    action = [&] {
      const RunConfig cfg = resolve_config(tr_opts);
      const auto g = load_graph(tr_graph);
      const auto result = train(g, cfg.model);
      const auto params_path = in_out_dir(cfg, tr_params, "params.json");
      const auto ratings_path = in_out_dir(cfg, tr_ratings, "ratings.jsonl");
      const auto trace_path = in_out_dir(cfg, tr_trace, "loss_trace.csv");
      for (const auto& p : {params_path, ratings_path, trace_path}) ensure_parent(p);
      save_params(params_path, result.params, cfg.model, g);
      save_ratings(result.ratings, static_cast<int>(g.instances.size()), ratings_path);
      write_loss_trace(result.loss_trace, trace_path);
      std::cout << "trained " << result.loss_trace.size() << " epochs, final loss "
                << (result.loss_trace.empty() ? std::string("n/a") : format_number(result.loss_trace.back())) << "\n";
    };
  });

  // predict
  CommonOptions pr_opts;
  std::string pr_ratings, pr_graph, pr_dataset, pr_out, pr_params, pr_method = kMethodDbgae;
  auto* pr = app.add_subcommand("predict", "Predict one label (or null) per instance");
  add_common(pr, pr_opts);
  pr->add_option("--method", pr_method, "dbgae, cluster_voting or pair_clustering")
      ->check(CLI::IsMember({std::string(kMethodDbgae), std::string(kMethodClusterVoting),
                             std::string(kMethodPairClustering)}));
  pr->add_option("--ratings", pr_ratings, "Ratings file (dbgae)");
  pr->add_option("--graph", pr_graph, "Graph file (dbgae)");
  pr->add_option("--params", pr_params, "Parameter checkpoint (dbgae with learned-feature cosine)");
  pr->add_option("--dataset", pr_dataset, "Dataset file (baselines)");
  pr->add_option("--out", pr_out, "Predictions file (default <out-dir>/predictions_<method>.jsonl)");
  pr->callback([&] {
    stage = "predict";
    action = [&] {
      const RunConfig cfg = resolve_config(pr_opts);
      std::vector<Prediction> preds;
      int num_classes = 0;
      if (pr_method == kMethodDbgae) {
        if (pr_ratings.empty() || pr_graph.empty()) throw ConfigError("predict", "dbgae needs --ratings and --graph");
        const auto g = load_graph(pr_graph);
        const auto ratings = load_ratings(pr_ratings);
        num_classes = g.num_classes;
        if (cfg.inference.cosine_on_raw_features) {
          preds = pool_labels(ratings, g, cfg.inference);
        } else {
          if (pr_params.empty()) throw ConfigError("predict", "learned-feature cosine needs --params");
          const auto [params, model] = load_params(pr_params);
          preds = predict_dbgae(ratings, g, params, model, cfg.inference);
        }
      } else {
        if (pr_dataset.empty()) throw ConfigError("predict", "baselines need --dataset");
        const auto ds = load_dataset(pr_dataset);
        num_classes = ds.num_classes;
        preds = pr_method == kMethodClusterVoting ? baseline_cluster_voting(ds, cfg.graph.eps, cfg.graph.min_pts)
                                                  : baseline_pair_clustering(ds, cfg.graph.eps, cfg.graph.min_pts);
      }
      const auto path = in_out_dir(cfg, pr_out, ("predictions_" + pr_method + ".jsonl").c_str());
      ensure_parent(path);
      save_predictions(preds, pr_method, num_classes, path);
      std::cout << "wrote " << path << ": " << preds.size() << " predictions\n";
    };
  });

  // evaluate
  CommonOptions ev_opts;
  std::vector<std::string> ev_pred;
  std::string ev_dataset, ev_report, ev_curves;
  auto* ev = app.add_subcommand("evaluate", "Score prediction files against ground truth");
  add_common(ev, ev_opts);
  ev->add_option("--pred", ev_pred, "Predictions file(s)")->required();
  ev->add_option("--dataset", ev_dataset, "Dataset file with ground truth")->required();
  ev->add_option("--out-report", ev_report, "Report (default <out-dir>/report.txt, plus .json)");
  ev->add_option("--out-curves", ev_curves, "Curves CSV (default <out-dir>/curves.csv)");
  ev->callback([&] {
    stage = "evaluate";
    action = [&] {
      const RunConfig cfg = resolve_config(ev_opts);
      const auto ds = load_dataset(ev_dataset);
      EvalReport report;
      for (const auto& path : ev_pred) {
        const auto pf = load_predictions(path);
        report.methods.push_back(evaluate(pf.predictions, ds, pf.method, cfg.evaluation));
      }
      const auto report_path = in_out_dir(cfg, ev_report, "report.txt");
      const auto curves_path = in_out_dir(cfg, ev_curves, "curves.csv");
      ensure_parent(report_path);
      ensure_parent(curves_path);
      write_report(report, report_path);
      write_curves(report, curves_path);
      std::cout << report_text(report);
    };
  });

  // pipeline
  CommonOptions pl_opts;
  auto* pl = app.add_subcommand("pipeline", "Run every stage and write all artifacts");
  add_common(pl, pl_opts);
  pl->callback([&] {
    stage = "pipeline";
    action = [&] {
      const RunConfig cfg = resolve_config(pl_opts);
      const auto result = run_pipeline(cfg);
      std::cout << report_text(result.report) << "artifacts in " << cfg.io.out_dir << "\n";
    };
  });

  // sweep
  CommonOptions sw_opts;
  std::string sw_param, sw_values, sw_out;
  int sw_replicates = 1;
  auto* sw = app.add_subcommand("sweep", "Run the pipeline over a list of values of one parameter");
  add_common(sw, sw_opts);
  sw->add_option("--param", sw_param, "Dotted config key, or 'ablation'")->required();
  sw->add_option("--values", sw_values, "Comma-separated values, e.g. 0.1,0.2 or full,no_cross")->required();
  sw->add_option("--replicates", sw_replicates, "Replicates per value");
  sw->add_option("--out", sw_out, "Sweep CSV (default <out-dir>/sweep.csv)");
  sw->callback([&] {
    stage = "sweep";
    action = [&] {
      const RunConfig cfg = resolve_config(sw_opts);
      SweepSpec spec{sw_param, parse_values(sw_values), sw_replicates};
      const auto result = run_sweep(spec, cfg);
      const auto path = in_out_dir(cfg, sw_out, "sweep.csv");
      ensure_parent(path);
      write_text_file(path, sweep_csv(result));
      std::cout << "wrote " << path << ": " << result.rows.size() << " rows\n";
      for (const auto& f : result.failures)
        std::cerr << "run value=" << f.value << " replicate=" << f.replicate << " failed: " << f.message << "\n";
      if (!result.failures.empty() && result.rows.empty()) throw std::runtime_error("every sweep run failed");
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    action();
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error in stage " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
