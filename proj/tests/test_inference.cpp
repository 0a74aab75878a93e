#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dbgae/eval.hpp"
#include "dbgae/graph.hpp"
#include "dbgae/inference.hpp"
#include "dbgae/model.hpp"
#include "fixtures.hpp"

namespace dbgae {
namespace {

using testing::GroupSpec;
using testing::make_dataset;

constexpr ClassId A = 0, B = 1, C = 2;

// Two groups: instance 0 with label A in group 0; instance 1 with labels A, B in group 1.
DualBipartiteGraph two_group_nodes(FeatureVector x0 = {1.0, 0.0}, FeatureVector x1 = {1.0, 0.0}) {
  return graph_nodes(make_dataset(3, 2, {GroupSpec{{{x0, A}}, {A}}, GroupSpec{{{x1, A}}, {A, B}}}));
}

RatingMatrix ratings_of(const std::vector<std::pair<DecodedEdge, double>>& edges) {
  RatingMatrix rm;
  rm.levels = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (const auto& [e, m] : edges) {
    rm.edges.push_back(e);
    rm.m_hat.push_back(m);
  }
  rm.probs = Matrix::Zero(static_cast<Eigen::Index>(edges.size()), 5);
  return rm;
}

DecodedEdge within(int instance, int label) { return {instance, label, EdgeKind::kWithin, -1}; }
DecodedEdge cross(int instance, int label, int via) { return {instance, label, EdgeKind::kCross, via}; }

// ---------------------------------------------------------------------------
// Label pooling

TEST(Pooling, InstanceWithoutEdgesIsNull) {
  const auto g = two_group_nodes();
  const auto preds = pool_labels(ratings_of({}), g);
  ASSERT_EQ(preds.size(), 2u);
  for (const auto& p : preds) {
    EXPECT_EQ(p.predicted, kNullClass);
    EXPECT_EQ(p.scores, std::vector<double>(3, 0.0));
  }
}

TEST(Pooling, SingleConfidentWithinEdgeScoresRatingMinusThreshold) {
  const auto g = two_group_nodes();
  const auto preds = pool_labels(ratings_of({{within(0, 0), 0.9}}), g);
  EXPECT_NEAR(preds[0].scores[A], 0.4, 1e-12);
  EXPECT_EQ(preds[0].predicted, A);
  EXPECT_EQ(preds[1].predicted, kNullClass);
}

TEST(Pooling, RatingAtOrBelowThresholdContributesNothing) {
  const auto g = two_group_nodes();
  const auto preds = pool_labels(ratings_of({{within(0, 0), 0.5}, {within(1, 2), 0.3}}), g);
  EXPECT_EQ(preds[0].predicted, kNullClass);
  EXPECT_EQ(preds[1].predicted, kNullClass);
}

TEST(Pooling, CrossEdgeIsDampedByCosineSimilarity) {
  // cos(x0, x1) = 0.5, so 0.8 * 0.5 = 0.4 falls below the threshold.
  const auto g = two_group_nodes({1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0});
  const auto preds = pool_labels(ratings_of({{cross(0, 2, 1), 0.8}}), g);
  EXPECT_EQ(preds[0].predicted, kNullClass);
  EXPECT_DOUBLE_EQ(preds[0].scores[B], 0.0);
}

TEST(Pooling, CrossEdgeBetweenParallelFeaturesKeepsItsRating) {
  const auto g = two_group_nodes({1.0, 2.0}, {2.0, 4.0});
  const auto preds = pool_labels(ratings_of({{cross(0, 2, 1), 0.9}}), g);
  EXPECT_NEAR(preds[0].scores[B], 0.4, 1e-12);
  EXPECT_EQ(preds[0].predicted, B);
}

TEST(Pooling, ZeroFeatureVectorMakesCrossEvidenceVanish) {
  const auto g = two_group_nodes({0.0, 0.0}, {1.0, 0.0});
  const auto preds = pool_labels(ratings_of({{cross(0, 2, 1), 1.0}}), g);
  EXPECT_EQ(preds[0].predicted, kNullClass);
}

TEST(Pooling, ScoresOfTheSameClassAccumulate) {
  // Instance 1 reaches class A through its own label and through instance 0's.
  const auto g = two_group_nodes();
  const auto preds =
      pool_labels(ratings_of({{within(1, 1), 0.9}, {cross(1, 0, 0), 0.8}, {within(1, 2), 0.95}}), g);
  EXPECT_NEAR(preds[1].scores[A], 0.4 + 0.3, 1e-12);
  EXPECT_NEAR(preds[1].scores[B], 0.45, 1e-12);
  EXPECT_EQ(preds[1].predicted, A);
}

TEST(Pooling, TiedScoresResolveToLowestClass) {
  const auto g = two_group_nodes();
  const auto preds = pool_labels(ratings_of({{within(1, 2), 0.75}, {within(1, 1), 0.75}}), g);
  EXPECT_EQ(preds[1].predicted, A);
}

TEST(Pooling, ThresholdIsConfigurable) {
  const auto g = two_group_nodes();
  InferenceConfig cfg;
  cfg.tau = 0.0;
  const auto preds = pool_labels(ratings_of({{within(0, 0), 0.3}}), g, cfg);
  EXPECT_NEAR(preds[0].scores[A], 0.3, 1e-12);
  EXPECT_EQ(preds[0].predicted, A);
}

TEST(Pooling, CosineFeatureOverrideReplacesRawFeatures) {
  const auto g = two_group_nodes({1.0, 0.0}, {0.0, 1.0});
  const auto rm = ratings_of({{cross(0, 2, 1), 0.9}});
  EXPECT_EQ(pool_labels(rm, g)[0].predicted, kNullClass);
  const std::vector<FeatureVector> learned{{1.0, 1.0, 0.0}, {2.0, 2.0, 0.0}};
  EXPECT_EQ(pool_labels(rm, g, {}, &learned)[0].predicted, B);
}

TEST(Pooling, EveryInstanceGetsExactlyOnePredictionInNodeOrder) {
  const auto ds = generate_synthetic([] {
    GeneratorConfig cfg;
    cfg.num_groups = 30;
    cfg.rng_seed = 5;
    return cfg;
  }());
  const auto g = build_dual_graph(ds, {});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RatingMatrix rm;
  for (const auto& e : g.within.edges) rm.edges.push_back(within(e.instance, e.label));
  for (const auto& e : g.cross.edges) rm.edges.push_back(cross(e.instance, e.label, e.via));
  for (std::size_t e = 0; e < rm.edges.size(); ++e) rm.m_hat.push_back(u(rng));
  const auto preds = pool_labels(rm, g);
  ASSERT_EQ(preds.size(), g.instances.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].instance_id, g.instances[i].instance_id);
    EXPECT_TRUE(preds[i].predicted == kNullClass ||
                (preds[i].predicted >= 0 && preds[i].predicted < ds.num_classes));
  }
}

TEST(Pooling, StrictlyIncreasingTransformOfScoresKeepsTheArgmax) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution zero(0.3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(6);
    for (auto& v : s) v = zero(rng) ? 0.0 : u(rng);
    std::vector<double> t(s);
    for (auto& v : t) v = v * v * v + 2.0 * v;  // increasing, fixes 0
    EXPECT_EQ(argmax_positive(s), argmax_positive(t));
    std::vector<double> l(s);
    for (auto& v : l) v = std::log1p(5.0 * v);
    EXPECT_EQ(argmax_positive(s), argmax_positive(l));
  }
}

TEST(Pooling, ArgmaxOfAllZeroScoresIsNull) {
  EXPECT_EQ(argmax_positive({0.0, 0.0}), kNullClass);
  EXPECT_EQ(argmax_positive({}), kNullClass);
  EXPECT_EQ(argmax_positive({0.0, 1e-12}), 1);
}

TEST(Cosine, MatchesDefinitionAndHandlesZeroNorm) {
  const std::vector<double> a{1, 2, 3}, b{-2, 0, 1}, z{0, 0, 0};
  EXPECT_NEAR(cosine_similarity(a, b), 1.0 / (std::sqrt(14.0) * std::sqrt(5.0)), 1e-15);
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, z), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(z, z), 0.0);
}

TEST(Pooling, NegativeThresholdIsRejected) {
  InferenceConfig cfg;
  cfg.tau = -0.1;
  EXPECT_THROW(pool_labels(ratings_of({}), two_group_nodes(), cfg), ConfigError);
}

// ---------------------------------------------------------------------------
// Cluster voting

TEST(ClusterVoting, MajorityOfPooledCandidatesWins) {
  // Three close instances in groups labelled {A}, {A}, {B}.
  const auto ds = make_dataset(2, 1,
                               {GroupSpec{{{{0.0}, A}}, {A}}, GroupSpec{{{{0.1}, A}}, {A}},
                                GroupSpec{{{{0.2}, A}}, {B}}});
  const auto preds = baseline_cluster_voting(ds, 0.5, 2);
  ASSERT_EQ(preds.size(), 3u);
  for (const auto& p : preds) EXPECT_EQ(p.predicted, A);
}

TEST(ClusterVoting, NoiseInstanceVotesWithinItsOwnGroup) {
  const auto ds = make_dataset(
      2, 1, {GroupSpec{{{{0.0}, B}}, {B}}, GroupSpec{{{{0.1}, B}}, {B}}, GroupSpec{{{{100.0}, A}}, {A}}});
  const auto preds = baseline_cluster_voting(ds, 0.5, 2);
  EXPECT_EQ(preds[2].predicted, A);
  EXPECT_EQ(preds[0].predicted, B);
}

TEST(ClusterVoting, TiedVotesResolveToLowestClass) {
  const auto ds = make_dataset(3, 1, {GroupSpec{{{{0.0}, B}}, {C, B}}, GroupSpec{{{{0.1}, B}}, {B, C}}});
  for (const auto& p : baseline_cluster_voting(ds, 0.5, 2)) EXPECT_EQ(p.predicted, B);
}

TEST(ClusterVoting, NoCandidateLabelsMeansNull) {
  const auto ds = make_dataset(2, 1, {GroupSpec{{{{0.0}, kNullClass}}, {}}});
  EXPECT_EQ(baseline_cluster_voting(ds, 0.5, 2)[0].predicted, kNullClass);
}

// ---------------------------------------------------------------------------
// Pair clustering

TEST(PairClustering, LinkInTheLargestClusterWins) {
  // Instance 0 links to A and B; the (x, A) tuple clusters with two others.
  const auto ds = make_dataset(2, 1,
                               {GroupSpec{{{{0.0}, A}}, {B, A}}, GroupSpec{{{{0.1}, A}}, {A}},
                                GroupSpec{{{{0.2}, A}}, {A}}});
  const auto links = count_cooccurrence(ds, 0.5, 2);
  ASSERT_EQ(links.size(), 4u);
  EXPECT_EQ(links[0].count, 1);  // (x0, B)
  EXPECT_EQ(links[1].count, 3);  // (x0, A)
  EXPECT_EQ(baseline_pair_clustering(ds, 0.5, 2)[0].predicted, A);
}

TEST(PairClustering, AllNoiseLinksResolveToLowestClass) {
  const auto ds = make_dataset(3, 1, {GroupSpec{{{{0.0}, C}}, {C, B}}});
  EXPECT_EQ(baseline_pair_clustering(ds, 0.5, 2)[0].predicted, B);
}

TEST(PairClustering, EmptyLabelSetMeansNull) {
  const auto ds = make_dataset(2, 1, {GroupSpec{{{{0.0}, kNullClass}}, {}}, GroupSpec{{{{0.0}, A}}, {A}}});
  const auto preds = baseline_pair_clustering(ds, 0.5, 2);
  EXPECT_EQ(preds[0].predicted, kNullClass);
  EXPECT_EQ(preds[1].predicted, A);
}

// ---------------------------------------------------------------------------
// Zero ambiguity

TEST(ZeroAmbiguity, BaselinesAreExact) {
  const auto ds = testing::unambiguous_dataset(4, 8, 3);
  for (const auto& preds : {baseline_cluster_voting(ds, 0.5, 2), baseline_pair_clustering(ds, 0.5, 2)})
    EXPECT_DOUBLE_EQ(evaluate(preds, ds, "m").accuracy, 1.0);
}

TEST(ZeroAmbiguity, TrainedModelIsExact) {
  const auto ds = testing::unambiguous_dataset(4, 8, 3);
  const auto g = build_dual_graph(ds, {});
  ModelConfig cfg;
  cfg.gcn_hidden = 16;
  cfg.dense_hidden = 8;
  cfg.num_heads = 2;
  cfg.epochs = 300;
  cfg.lr = 1e-2;
  const auto result = train(g, cfg);
  EXPECT_DOUBLE_EQ(evaluate(pool_labels(result.ratings, g), ds, "dbgae").accuracy, 1.0);
}

// ---------------------------------------------------------------------------
// Prediction files

TEST(PredictionFile, RoundTripIsExact) {
  std::vector<Prediction> preds{{0, A, {0.4, 0.0, 0.125}}, {1, kNullClass, {0.0, 0.0, 0.0}}, {7, C, {}}};
  const auto path = testing::temp_path("preds_roundtrip.jsonl");
  save_predictions(preds, "dbgae", 3, path);
  const auto pf = load_predictions(path);
  EXPECT_EQ(pf.method, "dbgae");
  EXPECT_EQ(pf.predictions, preds);
}

TEST(PredictionFile, MissingFileIsAnIoError) {
  EXPECT_THROW(load_predictions(testing::temp_path("does_not_exist.jsonl")), IoError);
}

}  // namespace
}  // namespace dbgae
