#pragma once

// Dual bipartite graph autoencoder.
//
// Encoder: one graph-convolution layer with separate within-group and
// cross-group propagation paths. Every bipartite edge is used in both
// directions. The message j -> i is alpha_ij * w_ij * W feat_j, where alpha
// comes from masked attention normalised per destination node and per path.
// Heads share W and differ only in their attention parameters, so averaging
// heads is the same as averaging their coefficients before the product with W.
// Dense layer: u_i = relu(W_u [h_within ; h_cross ; f_i]) for instances and
// v_j = relu(W_v [h_within ; h_cross ; n_j]) for labels.
// Decoder: p(M_ij = r) = softmax_r(u_i' Q_r v_j), M_ij = sum_r r p(M_ij = r).
// Loss: mean negative log-likelihood of the quantised within-group weight over
// observed within edges.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbgae/adam.hpp"
#include "dbgae/autodiff.hpp"
#include "dbgae/checkpoint.hpp"
#include "dbgae/graph.hpp"

namespace dbgae {

struct ModelConfig {
  int gcn_hidden = 1000;
  int dense_hidden = 100;
  int num_heads = 4;
  std::vector<double> rating_levels{0.0, 0.25, 0.5, 0.75, 1.0};
  int epochs = 1000;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  bool use_cross_links = true;
  bool use_attention = true;
  bool use_dual_paths = true;
  // false gives each path its own propagation matrix.
  bool shared_propagation_weight = true;
  double leaky_slope = 0.2;

  void validate() const {
    if (gcn_hidden < 1) throw ConfigError("gcn_hidden", "must be >= 1");
    if (dense_hidden < 1) throw ConfigError("dense_hidden", "must be >= 1");
    if (num_heads < 1) throw ConfigError("num_heads", "must be >= 1");
    if (rating_levels.empty()) throw ConfigError("rating_levels", "must not be empty");
    for (std::size_t r = 0; r < rating_levels.size(); ++r) {
      if (!(rating_levels[r] >= 0 && rating_levels[r] <= 1)) throw ConfigError("rating_levels", "must lie in [0,1]");
      if (r > 0 && !(rating_levels[r] > rating_levels[r - 1]))
        throw ConfigError("rating_levels", "must be strictly increasing");
    }
    if (epochs < 0) throw ConfigError("epochs", "must be >= 0");
    if (!(lr > 0)) throw ConfigError("lr", "must be > 0");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, gcn_hidden, dense_hidden, num_heads, rating_levels, epochs,
                                                lr, seed, use_cross_links, use_attention, use_dual_paths,
                                                shared_propagation_weight, leaky_slope)

inline const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"full", "no_cross", "no_attention", "no_dual"};
  return names;
}

// Ablation variants as flag settings on top of `base`.
inline ModelConfig apply_variant(ModelConfig base, const std::string& variant) {
  base.use_cross_links = base.use_attention = base.use_dual_paths = true;
  if (variant == "full") return base;
  if (variant == "no_cross") base.use_cross_links = false;
  else if (variant == "no_attention") base.use_attention = false;
  else if (variant == "no_dual") base.use_dual_paths = false;
  else throw ConfigError("variant", "unknown ablation variant '" + variant + "'");
  return base;
}

// Nearest rating level; an exact midpoint goes to the higher level.
inline int quantize_level(double w, const std::vector<double>& levels) {
  int best = 0;
  for (int r = 1; r < static_cast<int>(levels.size()); ++r) {
    const double d_best = std::abs(w - levels[best]);
    const double d_r = std::abs(w - levels[r]);
    if (d_r < d_best || std::abs(d_r - d_best) <= 1e-12) best = r;
  }
  return best;
}

struct ModelParams {
  Matrix W;        // propagation, (d + C) x gcn_hidden
  Matrix W_cross;  // only when the paths do not share W
  std::vector<Matrix> W_a;  // per head, (d + C) x dense_hidden
  std::vector<Matrix> a;    // per head, dense_hidden x 2 (destination column, source column)
  Matrix W_f, W_n, b;
  Matrix W_u, W_v;
  std::vector<Matrix> Q;  // per rating level, dense_hidden x dense_hidden

  std::vector<Matrix*> list() {
    std::vector<Matrix*> out{&W};
    if (W_cross.size() > 0) out.push_back(&W_cross);
    for (auto& m : W_a) out.push_back(&m);
    for (auto& m : a) out.push_back(&m);
    for (Matrix* m : {&W_f, &W_n, &b, &W_u, &W_v}) out.push_back(m);
    for (auto& m : Q) out.push_back(&m);
    return out;
  }

  std::vector<NamedTensor> named() const {
    std::vector<NamedTensor> out{{"W", W}};
    if (W_cross.size() > 0) out.push_back({"W_cross", W_cross});
    for (std::size_t k = 0; k < W_a.size(); ++k) out.push_back({"W_a." + std::to_string(k), W_a[k]});
    for (std::size_t k = 0; k < a.size(); ++k) out.push_back({"a." + std::to_string(k), a[k]});
    out.push_back({"W_f", W_f});
    out.push_back({"W_n", W_n});
    out.push_back({"b", b});
    out.push_back({"W_u", W_u});
    out.push_back({"W_v", W_v});
    for (std::size_t r = 0; r < Q.size(); ++r) out.push_back({"Q." + std::to_string(r), Q[r]});
    return out;
  }

  static ModelParams from_named(const std::vector<NamedTensor>& tensors) {
    ModelParams p;
    auto indexed = [](std::vector<Matrix>& v, const std::string& suffix, const Matrix& m) {
      const auto k = static_cast<std::size_t>(std::stoul(suffix));
      if (v.size() <= k) v.resize(k + 1);
      v[k] = m;
    };
    for (const auto& t : tensors) {
      if (t.name == "W") p.W = t.value;
      else if (t.name == "W_cross") p.W_cross = t.value;
      else if (t.name == "W_f") p.W_f = t.value;
      else if (t.name == "W_n") p.W_n = t.value;
      else if (t.name == "b") p.b = t.value;
      else if (t.name == "W_u") p.W_u = t.value;
      else if (t.name == "W_v") p.W_v = t.value;
      else if (t.name.rfind("W_a.", 0) == 0) indexed(p.W_a, t.name.substr(4), t.value);
      else if (t.name.rfind("a.", 0) == 0) indexed(p.a, t.name.substr(2), t.value);
      else if (t.name.rfind("Q.", 0) == 0) indexed(p.Q, t.name.substr(2), t.value);
      else throw SchemaError("unknown parameter tensor '" + t.name + "'");
    }
    return p;
  }
};

inline Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

inline ModelParams init_params(const ModelConfig& config, int feature_dim, int num_classes) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const int D = feature_dim + num_classes, H = config.gcn_hidden, E = config.dense_hidden;
  ModelParams p;
  p.W = glorot_uniform(D, H, rng);
  if (!config.shared_propagation_weight) p.W_cross = glorot_uniform(D, H, rng);
  for (int k = 0; k < config.num_heads; ++k) {
    p.W_a.push_back(glorot_uniform(D, E, rng));
    p.a.push_back(glorot_uniform(E, 2, rng));
  }
  p.W_f = glorot_uniform(feature_dim, H, rng);
  p.W_n = glorot_uniform(num_classes, H, rng);
  p.b = Matrix::Zero(1, H);
  p.W_u = glorot_uniform(3 * H, E, rng);
  p.W_v = glorot_uniform(3 * H, E, rng);
  for (std::size_t r = 0; r < config.rating_levels.size(); ++r) p.Q.push_back(glorot_uniform(E, E, rng));
  return p;
}

// ---------------------------------------------------------------------------
// Graph preparation

enum class EdgeKind : std::uint8_t { kWithin, kCross };

struct DecodedEdge {
  int instance = 0;
  int label = 0;
  EdgeKind kind = EdgeKind::kWithin;
  int via = -1;  // cross edges only
  friend bool operator==(const DecodedEdge&, const DecodedEdge&) = default;
};

// Directed edge list of one propagation path over global node rows
// (instances first, then labels).
struct PathEdges {
  std::shared_ptr<const Index> src, dst;
  Matrix weight;  // E x 1
  std::size_t size() const { return src->size(); }
};

struct PreparedGraph {
  int num_instances = 0;
  int num_labels = 0;
  int feature_dim = 0;
  int num_classes = 0;
  Matrix inputs;         // N x (d + C): [x ; 0] for instances, [0 ; onehot] for labels
  Matrix instance_part;  // N x d, zero rows for labels
  Matrix label_part;     // N x C, zero rows for instances
  std::vector<PathEdges> paths;  // {within, cross}, or {merged} without dual paths
  std::vector<DecodedEdge> decode_edges;  // within edges first, then cross
  std::shared_ptr<const Index> decode_instance, decode_label, instance_rows, label_rows;
  std::shared_ptr<const Index> loss_rows, loss_targets;
  std::vector<double> targets_weight;  // reconstruction target weight per decode edge (within only)

  int num_nodes() const { return num_instances + num_labels; }
};

inline PathEdges make_path(const std::vector<std::tuple<int, int, double>>& undirected, int num_instances) {
  Index src, dst;
  std::vector<double> w;
  for (const auto& [i, j, weight] : undirected) {
    src.push_back(num_instances + j);  // label -> instance
    dst.push_back(i);
    w.push_back(weight);
    src.push_back(i);  // instance -> label
    dst.push_back(num_instances + j);
    w.push_back(weight);
  }
  PathEdges p;
  p.weight = Matrix(static_cast<Eigen::Index>(w.size()), 1);
  for (std::size_t e = 0; e < w.size(); ++e) p.weight(e, 0) = w[e];
  p.src = make_index(std::move(src));
  p.dst = make_index(std::move(dst));
  return p;
}

inline PreparedGraph prepare_graph(const DualBipartiteGraph& g, const ModelConfig& config) {
  PreparedGraph pg;
  pg.num_instances = static_cast<int>(g.instances.size());
  pg.num_labels = static_cast<int>(g.labels.size());
  pg.feature_dim = g.feature_dim;
  pg.num_classes = g.num_classes;
  const int N = pg.num_nodes(), d = g.feature_dim, C = g.num_classes;
  pg.inputs = Matrix::Zero(N, d + C);
  pg.instance_part = Matrix::Zero(N, d);
  pg.label_part = Matrix::Zero(N, C);
  for (int i = 0; i < pg.num_instances; ++i)
    for (int k = 0; k < d; ++k) pg.inputs(i, k) = pg.instance_part(i, k) = g.instances[i].features[k];
  for (int j = 0; j < pg.num_labels; ++j) {
    pg.inputs(pg.num_instances + j, d + g.labels[j].class_id) = 1.0;
    pg.label_part(pg.num_instances + j, g.labels[j].class_id) = 1.0;
  }

  // Edge weights fed to the encoder and used as reconstruction targets.
  std::vector<double> within_w, cross_w;
  for (const auto& e : g.within.edges) within_w.push_back(e.weight);
  for (const auto& e : g.cross.edges) cross_w.push_back(e.weight);
  if (!config.use_dual_paths) {
    // Uniform confidence over each instance's candidates, per edge kind.
    std::vector<int> deg_w(pg.num_instances, 0), deg_c(pg.num_instances, 0);
    for (const auto& e : g.within.edges) ++deg_w[e.instance];
    for (const auto& e : g.cross.edges) ++deg_c[e.instance];
    for (std::size_t k = 0; k < within_w.size(); ++k) within_w[k] = 1.0 / deg_w[g.within.edges[k].instance];
    for (std::size_t k = 0; k < cross_w.size(); ++k) cross_w[k] = 1.0 / deg_c[g.cross.edges[k].instance];
  }

  std::vector<std::tuple<int, int, double>> within_list, cross_list;
  for (std::size_t k = 0; k < g.within.edges.size(); ++k)
    within_list.emplace_back(g.within.edges[k].instance, g.within.edges[k].label, within_w[k]);
  if (config.use_cross_links)
    for (std::size_t k = 0; k < g.cross.edges.size(); ++k)
      cross_list.emplace_back(g.cross.edges[k].instance, g.cross.edges[k].label, cross_w[k]);
  if (config.use_dual_paths) {
    pg.paths.push_back(make_path(within_list, pg.num_instances));
    pg.paths.push_back(make_path(cross_list, pg.num_instances));
  } else {
    auto merged = within_list;
    merged.insert(merged.end(), cross_list.begin(), cross_list.end());
    pg.paths.push_back(make_path(merged, pg.num_instances));
  }

  Index dec_i, dec_l, rows, targets;
  for (std::size_t k = 0; k < g.within.edges.size(); ++k) {
    const auto& e = g.within.edges[k];
    pg.decode_edges.push_back({e.instance, e.label, EdgeKind::kWithin, -1});
    pg.targets_weight.push_back(within_w[k]);
    if (g.within.observed[k]) {
      rows.push_back(static_cast<int>(k));
      targets.push_back(quantize_level(within_w[k], config.rating_levels));
    }
  }
  if (config.use_cross_links)
    for (const auto& e : g.cross.edges) pg.decode_edges.push_back({e.instance, e.label, EdgeKind::kCross, e.via});
  for (const auto& e : pg.decode_edges) {
    dec_i.push_back(e.instance);
    dec_l.push_back(e.label);
  }
  Index inst_rows(pg.num_instances), label_rows(pg.num_labels);
  std::iota(inst_rows.begin(), inst_rows.end(), 0);
  std::iota(label_rows.begin(), label_rows.end(), pg.num_instances);
  pg.decode_instance = make_index(std::move(dec_i));
  pg.decode_label = make_index(std::move(dec_l));
  pg.instance_rows = make_index(std::move(inst_rows));
  pg.label_rows = make_index(std::move(label_rows));
  pg.loss_rows = make_index(std::move(rows));
  pg.loss_targets = make_index(std::move(targets));
  return pg;
}

// ---------------------------------------------------------------------------
// Forward pass on a tape

struct ForwardPass {
  Tape tape;
  std::vector<Var> params;                    // parallel to ModelParams::list()
  std::vector<std::vector<Var>> attention;    // [path][head], E_path x 1; empty without attention
  std::vector<Var> coefficients;              // [path], head-averaged alpha * w
  std::vector<Var> aggregated;                // [path], N x (d + C) weighted neighbour features
  Var h_within, h_cross, node_features, U, V, logits;
  Var loss;                                   // invalid when there are no observed edges
};

inline ForwardPass build_forward(const PreparedGraph& pg, ModelParams& params, const ModelConfig& config) {
  ForwardPass fp;
  Tape& t = fp.tape;
  for (Matrix* m : params.list()) fp.params.push_back(t.variable(*m));
  std::size_t at = 0;
  const Var W = fp.params[at++];
  const Var W_cross = params.W_cross.size() > 0 ? fp.params[at++] : W;
  std::vector<Var> W_a, a;
  for (int k = 0; k < config.num_heads; ++k) W_a.push_back(fp.params[at++]);
  for (int k = 0; k < config.num_heads; ++k) a.push_back(fp.params[at++]);
  const Var W_f = fp.params[at++], W_n = fp.params[at++], b = fp.params[at++];
  const Var W_u = fp.params[at++], W_v = fp.params[at++];
  std::vector<Var> Q(fp.params.begin() + static_cast<long>(at), fp.params.end());

  const int N = pg.num_nodes(), H = config.gcn_hidden;
  const Var X = t.constant(pg.inputs);

  // Per head, the destination and source halves of a' [W_a feat_i ; W_a feat_j].
  std::vector<Var> score_dst, score_src;
  if (config.use_attention) {
    const Var pick_dst = t.constant(Matrix{{1.0}, {0.0}});
    const Var pick_src = t.constant(Matrix{{0.0}, {1.0}});
    for (int k = 0; k < config.num_heads; ++k) {
      const Var s = t.matmul(t.matmul(X, W_a[k]), a[k]);
      score_dst.push_back(t.matmul(s, pick_dst));
      score_src.push_back(t.matmul(s, pick_src));
    }
  }

  std::vector<Var> hidden;
  for (std::size_t p = 0; p < pg.paths.size(); ++p) {
    const PathEdges& path = pg.paths[p];
    const Var w = t.constant(path.weight);
    Var coef = w;
    fp.attention.emplace_back();
    if (config.use_attention) {
      Var alpha_sum;
      for (int k = 0; k < config.num_heads; ++k) {
        const Var e = t.leaky_relu(
            t.add(t.gather_rows(score_dst[k], path.dst), t.gather_rows(score_src[k], path.src)), config.leaky_slope);
        const Var alpha = t.segment_softmax(e, path.dst, N);
        fp.attention.back().push_back(alpha);
        alpha_sum = alpha_sum.valid() ? t.add(alpha_sum, alpha) : alpha;
      }
      coef = t.mul(t.scale(alpha_sum, 1.0 / config.num_heads), w);
    }
    fp.coefficients.push_back(coef);
    const Var agg = t.edge_scatter(coef, X, path.src, path.dst, N);
    fp.aggregated.push_back(agg);
    hidden.push_back(t.relu(t.matmul(agg, p == 1 ? W_cross : W)));
  }
  fp.h_within = hidden[0];
  fp.h_cross = hidden.size() > 1 ? hidden[1] : t.constant(Matrix::Zero(N, H));

  const Var Xi = t.constant(pg.instance_part), Li = t.constant(pg.label_part);
  fp.node_features = t.relu(t.add_row(t.add(t.matmul(Xi, W_f), t.matmul(Li, W_n)), b));
  const std::vector<Var> parts{fp.h_within, fp.h_cross, fp.node_features};
  const Var cat = t.concat_cols(parts);
  fp.U = t.relu(t.matmul(t.gather_rows(cat, pg.instance_rows), W_u));
  fp.V = t.relu(t.matmul(t.gather_rows(cat, pg.label_rows), W_v));

  std::vector<Var> level_logits;
  for (const Var q : Q) level_logits.push_back(t.gather_dot(t.matmul(fp.U, q), fp.V, pg.decode_instance, pg.decode_label));
  fp.logits = t.concat_cols(level_logits);
  if (!pg.loss_rows->empty()) fp.loss = t.cross_entropy(fp.logits, pg.loss_rows, pg.loss_targets);
  return fp;
}

// ---------------------------------------------------------------------------
// Ratings

struct RatingMatrix {
  std::vector<double> levels;
  std::vector<DecodedEdge> edges;
  Matrix probs;               // edges x levels
  std::vector<double> m_hat;  // expected rating per edge
};

inline RatingMatrix ratings_from_logits(const Matrix& logits, const std::vector<DecodedEdge>& edges,
                                        const std::vector<double>& levels) {
  RatingMatrix rm;
  rm.levels = levels;
  rm.edges = edges;
  rm.probs.resize(logits.rows(), logits.cols());
  rm.m_hat.resize(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index e = 0; e < logits.rows(); ++e) {
    const double mx = logits.row(e).maxCoeff();
    rm.probs.row(e) = (logits.row(e).array() - mx).exp();
    rm.probs.row(e) /= rm.probs.row(e).sum();
    double m = 0;
    for (Eigen::Index r = 0; r < logits.cols(); ++r) m += levels[r] * rm.probs(e, r);
    rm.m_hat[e] = m;
  }
  return rm;
}

// Mean negative log-likelihood of the quantised targets over observed within
// edges, evaluated from decoded distributions.
inline double reconstruction_loss(const RatingMatrix& ratings, const WithinGraph& within) {
  double total = 0;
  std::size_t n = 0;
  for (std::size_t e = 0; e < within.edges.size(); ++e) {
    if (!within.observed[e]) continue;
    const int target = quantize_level(within.edges[e].weight, ratings.levels);
    total -= std::log(ratings.probs(static_cast<Eigen::Index>(e), target));
    ++n;
  }
  if (n == 0) throw TrainingError("no observed within-group edges to reconstruct");
  return total / static_cast<double>(n);
}

struct EncoderOutput {
  Matrix U, V;
};

inline EncoderOutput encode(const DualBipartiteGraph& g, const ModelParams& params, const ModelConfig& config) {
  ModelParams copy = params;
  const auto fp = build_forward(prepare_graph(g, config), copy, config);
  return {fp.tape.value(fp.U), fp.tape.value(fp.V)};
}

// Bilinear softmax decoder over rating levels for the given edges.
inline RatingMatrix decode(const Matrix& U, const Matrix& V, const ModelParams& params,
                           const std::vector<DecodedEdge>& edges, const std::vector<double>& levels) {
  if (params.Q.size() != levels.size()) throw DimensionError("decode: one Q matrix per rating level required");
  Matrix logits(static_cast<Eigen::Index>(edges.size()), static_cast<Eigen::Index>(levels.size()));
  for (std::size_t r = 0; r < levels.size(); ++r) {
    const Matrix UQ = U * params.Q[r];
    for (std::size_t e = 0; e < edges.size(); ++e)
      logits(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(r)) = UQ.row(edges[e].instance).dot(V.row(edges[e].label));
  }
  return ratings_from_logits(logits, edges, levels);
}

inline RatingMatrix predict_ratings(const DualBipartiteGraph& g, const ModelParams& params, const ModelConfig& config) {
  ModelParams copy = params;
  const PreparedGraph pg = prepare_graph(g, config);
  const auto fp = build_forward(pg, copy, config);
  return ratings_from_logits(fp.tape.value(fp.logits), pg.decode_edges, config.rating_levels);
}

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
  ModelParams params;
  RatingMatrix ratings;
  std::vector<double> loss_trace;  // loss before each epoch's update
};

struct TrainOptions {
  // Called after each epoch's forward pass with the decoded logits of every edge.
  std::function<void(int epoch, double loss, const Matrix& logits)> on_epoch;
};

inline TrainResult train(const DualBipartiteGraph& g, const ModelConfig& config, const TrainOptions& options = {}) {
  config.validate();
  const PreparedGraph pg = prepare_graph(g, config);
  if (pg.loss_rows->empty()) throw TrainingError("training setup: graph has no observed within-group edges");

  TrainResult result;
  result.params = init_params(config, g.feature_dim, g.num_classes);
  ForwardPass fp = build_forward(pg, result.params, config);
  auto param_list = result.params.list();
  AdamState adam;
  adam.lr = config.lr;
  std::vector<Matrix> grads(param_list.size());
  double last_finite = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch > 0) {
      for (std::size_t k = 0; k < param_list.size(); ++k) fp.tape.set_value(fp.params[k], *param_list[k]);
      fp.tape.forward();
    }
    const double loss = fp.tape.value(fp.loss)(0, 0);
    if (!std::isfinite(loss))
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " (last finite loss " +
                          std::to_string(last_finite) + ")");
    last_finite = loss;
    result.loss_trace.push_back(loss);
    if (options.on_epoch) options.on_epoch(epoch, loss, fp.tape.value(fp.logits));
    fp.tape.backward(fp.loss);
    for (std::size_t k = 0; k < param_list.size(); ++k) grads[k] = fp.tape.grad(fp.params[k]);
    std::vector<Matrix> current;
    current.reserve(param_list.size());
    for (Matrix* m : param_list) current.push_back(std::move(*m));
    try {
      adam_step(current, grads, adam);
    } catch (const TrainingError& e) {
      throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + " (last finite loss " +
                          std::to_string(last_finite) + ")");
    }
    for (std::size_t k = 0; k < param_list.size(); ++k) *param_list[k] = std::move(current[k]);
  }
  for (std::size_t k = 0; k < param_list.size(); ++k) fp.tape.set_value(fp.params[k], *param_list[k]);
  fp.tape.forward();
  result.ratings = ratings_from_logits(fp.tape.value(fp.logits), pg.decode_edges, config.rating_levels);
  return result;
}

// ---------------------------------------------------------------------------
// Files

inline void save_params(const std::string& path, const ModelParams& params, const ModelConfig& config,
                        const DualBipartiteGraph& g) {
  save_tensors(path, params.named(),
               {{"model", nlohmann::json(config)}, {"feature_dim", g.feature_dim}, {"num_classes", g.num_classes}});
}

inline std::pair<ModelParams, ModelConfig> load_params(const std::string& path) {
  auto [tensors, meta] = load_tensors(path);
  ModelConfig config = meta.value("model", nlohmann::json::object()).get<ModelConfig>();
  return {ModelParams::from_named(tensors), config};
}

inline const char* edge_kind_name(EdgeKind k) { return k == EdgeKind::kWithin ? "within" : "cross"; }

// Ratings file: header {"format":"dbgae-ratings","levels":[...]} followed by
// one {"src","dst","kind","m_hat","p"} record per edge (plus "via" on cross
// edges). src is the instance node id, dst the label node id.
inline void write_ratings(const RatingMatrix& rm, int num_instances, std::ostream& out) {
  out << nlohmann::json{{"format", "dbgae-ratings"}, {"version", 1}, {"levels", rm.levels}, {"num_instances", num_instances}}
             .dump()
      << '\n';
  for (std::size_t e = 0; e < rm.edges.size(); ++e) {
    const auto& edge = rm.edges[e];
    std::vector<double> p(rm.levels.size());
    for (std::size_t r = 0; r < p.size(); ++r) p[r] = rm.probs(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(r));
    nlohmann::json j = {{"src", edge.instance},
                        {"dst", num_instances + edge.label},
                        {"kind", edge_kind_name(edge.kind)},
                        {"m_hat", rm.m_hat[e]},
                        {"p", p}};
    if (edge.kind == EdgeKind::kCross) j["via"] = edge.via;
    out << j.dump() << '\n';
  }
}

inline RatingMatrix read_ratings(std::istream& in) {
  RatingMatrix rm;
  std::string text;
  std::size_t line_no = 0;
  int num_instances = 0;
  std::vector<std::vector<double>> rows;
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
        if (j.value("format", "") != "dbgae-ratings") throw ParseError(line_no, "missing dbgae-ratings header");
        rm.levels = j.at("levels").get<std::vector<double>>();
        num_instances = j.at("num_instances").get<int>();
        continue;
      }
      DecodedEdge e;
      e.instance = j.at("src").get<int>();
      e.label = j.at("dst").get<int>() - num_instances;
      e.kind = j.at("kind") == "cross" ? EdgeKind::kCross : EdgeKind::kWithin;
      e.via = e.kind == EdgeKind::kCross ? j.at("via").get<int>() : -1;
      rm.edges.push_back(e);
      rm.m_hat.push_back(j.at("m_hat").get<double>());
      rows.push_back(j.at("p").get<std::vector<double>>());
      if (rows.back().size() != rm.levels.size()) throw SchemaError("line " + std::to_string(line_no) + ": p has wrong length");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad record: ") + e.what());
  }
  if (line_no == 0) throw ParseError(0, "empty ratings file");
  rm.probs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rm.levels.size()));
  for (std::size_t e = 0; e < rows.size(); ++e)
    for (std::size_t r = 0; r < rm.levels.size(); ++r) rm.probs(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(r)) = rows[e][r];
  return rm;
}

inline void save_ratings(const RatingMatrix& rm, int num_instances, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_ratings(rm, num_instances, out);
}

inline RatingMatrix load_ratings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return read_ratings(in);
}

}  // namespace dbgae
