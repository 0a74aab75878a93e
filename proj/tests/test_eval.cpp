#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "dbgae/eval.hpp"
#include "fixtures.hpp"

namespace dbgae {
namespace {

using testing::GroupSpec;
using testing::make_dataset;

constexpr ClassId A = 0, B = 1, C = 2;

std::vector<Prediction> predict_all(const GpllDataset& ds, const std::vector<ClassId>& classes) {
  std::vector<Prediction> out;
  std::size_t k = 0;
  for (const auto& g : ds.groups)
    for (const auto& x : g.instances) out.push_back({x.instance_id, classes.at(k++), {}});
  return out;
}

std::vector<Prediction> predict_truth(const GpllDataset& ds) {
  std::vector<Prediction> out;
  for (const auto& g : ds.groups)
    for (const auto& x : g.instances) out.push_back({x.instance_id, *x.true_class, {}});
  return out;
}

GpllDataset generated(std::uint64_t seed, int groups = 80) {
  GeneratorConfig cfg;
  cfg.num_groups = groups;
  cfg.rng_seed = seed;
  return generate_synthetic(cfg);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Headline metrics

TEST(Metrics, PerfectPredictionsScoreOne) {
  const auto ds = generated(3);
  const auto m = evaluate(predict_truth(ds), ds, "oracle");
  EXPECT_EQ(m.method, "oracle");
  EXPECT_EQ(m.n, ds.num_instances());
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0);
}

TEST(Metrics, BinaryExampleGivesHalfAccuracyAndOneThirdF1) {
  const auto ds = make_dataset(2, 1, {GroupSpec{{{{0.0}, A}}, {A}}, GroupSpec{{{{1.0}, B}}, {B}}});
  const auto m = evaluate(predict_all(ds, {A, A}), ds);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_NEAR(m.macro_f1, 1.0 / 3.0, 1e-15);
}

TEST(Metrics, ClassOnlyPredictedStillCountsTowardsF1) {
  const auto ds = make_dataset(2, 1, {GroupSpec{{{{0.0}, A}, {{1.0}, A}}, {A}}});
  const auto m = evaluate(predict_all(ds, {A, B}), ds);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_NEAR(m.macro_f1, (2.0 / 3.0 + 0.0) / 2.0, 1e-15);
}

TEST(Metrics, NullIsAnOrdinaryClass) {
  const auto ds =
      make_dataset(2, 1, {GroupSpec{{{{0.0}, kNullClass}, {{1.0}, A}}, {A}}, GroupSpec{{{{2.0}, kNullClass}}, {B}}});
  const auto right = evaluate(predict_all(ds, {kNullClass, A, kNullClass}), ds);
  EXPECT_DOUBLE_EQ(right.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(right.macro_f1, 1.0);
  const auto wrong = evaluate(predict_all(ds, {A, A, kNullClass}), ds);
  EXPECT_NEAR(wrong.accuracy, 2.0 / 3.0, 1e-15);
  // null: tp 1, fn 1 -> 2/3; A: tp 1, fp 1 -> 2/3.
  EXPECT_NEAR(wrong.macro_f1, 2.0 / 3.0, 1e-15);
}

TEST(Metrics, ScoresAreBounded) {
  const auto ds = generated(4);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> cls(-1, ds.num_classes - 1);
  std::vector<ClassId> guesses(ds.num_instances());
  for (auto& c : guesses) c = cls(rng);
  const auto m = evaluate(predict_all(ds, guesses), ds);
  EXPECT_GE(m.accuracy, 0.0);
  EXPECT_LE(m.accuracy, 1.0);
  EXPECT_GE(m.macro_f1, 0.0);
  EXPECT_LE(m.macro_f1, 1.0);
}

TEST(Metrics, PredictionOrderDoesNotMatter) {
  const auto ds = generated(5);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cls(-1, ds.num_classes - 1);
  std::vector<ClassId> guesses(ds.num_instances());
  for (auto& c : guesses) c = cls(rng);
  auto preds = predict_all(ds, guesses);
  const auto a = evaluate(preds, ds);
  std::shuffle(preds.begin(), preds.end(), rng);
  const auto b = evaluate(preds, ds);
  EXPECT_EQ(report_json({{a}}), report_json({{b}}));
}

TEST(Metrics, InstanceOrderWithinGroupsDoesNotMatter) {
  auto ds = generated(6);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> cls(-1, ds.num_classes - 1);
  std::vector<Prediction> preds;
  for (const auto& g : ds.groups)
    for (const auto& x : g.instances) preds.push_back({x.instance_id, cls(rng), {}});
  const auto a = evaluate(preds, ds);
  for (auto& g : ds.groups) std::reverse(g.instances.begin(), g.instances.end());
  std::reverse(ds.groups.begin(), ds.groups.end());
  const auto b = evaluate(preds, ds);
  EXPECT_EQ(report_json({{a}}), report_json({{b}}));
}

TEST(Metrics, MissingGroundTruthIsAContractViolation) {
  auto ds = make_dataset(2, 1, {GroupSpec{{{{0.0}, A}}, {A}}});
  ds.groups[0].instances[0].true_class.reset();
  EXPECT_THROW(evaluate(predict_all(ds, {A}), ds), ContractError);
}

TEST(Metrics, MissingPredictionIsASchemaError) {
  const auto ds = make_dataset(2, 1, {GroupSpec{{{{0.0}, A}, {{1.0}, B}}, {A, B}}});
  EXPECT_THROW(evaluate({{0, A, {}}}, ds), SchemaError);
}

// ---------------------------------------------------------------------------
// Bins

TEST(Bins, AmbiguityBinsFollowTheTrueClassRatio) {
  // A: 1 correct, 1 wrong link -> 0.5. B: only a wrong link -> 1.0.
  // Null without candidate links is placed at 1.0.
  const auto ds = make_dataset(
      2, 1, {GroupSpec{{{{0.0}, A}}, {A}}, GroupSpec{{{{1.0}, B}}, {A}}, GroupSpec{{{{2.0}, kNullClass}}, {}}});
  const auto m = evaluate(predict_truth(ds), ds);
  ASSERT_EQ(m.ambiguity_bins.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_DOUBLE_EQ(m.ambiguity_bins[k].low, k / 10.0);
    EXPECT_DOUBLE_EQ(m.ambiguity_bins[k].high, (k + 1) / 10.0);
    const std::size_t expected = k == 5 ? 1 : k == 9 ? 2 : 0;
    EXPECT_EQ(m.ambiguity_bins[k].n, expected) << "bin " << k;
    EXPECT_EQ(m.ambiguity_bins[k].accuracy.has_value(), expected > 0);
  }
}

TEST(Bins, FrequencyBinsUseClosedEdges) {
  std::vector<GroupSpec> groups;
  auto add = [&](ClassId c, int times) {
    for (int t = 0; t < times; ++t) groups.push_back({{{{static_cast<double>(c)}, c}}, {c}});
  };
  add(A, 7);
  add(B, 8);
  add(C, 15);
  groups.push_back({{{{9.0}, kNullClass}}, {}});
  const auto ds = make_dataset(3, 1, groups);
  const auto m = evaluate(predict_truth(ds), ds);
  ASSERT_EQ(m.frequency_bins.size(), 3u);
  EXPECT_EQ(m.frequency_bins[0].n, 7u + 1u);
  EXPECT_EQ(m.frequency_bins[1].n, 8u);
  EXPECT_EQ(m.frequency_bins[2].n, 15u);
  EXPECT_DOUBLE_EQ(m.frequency_bins[0].low, 0.0);
  EXPECT_DOUBLE_EQ(m.frequency_bins[0].high, 7.0);
  EXPECT_DOUBLE_EQ(m.frequency_bins[1].low, 8.0);
  EXPECT_DOUBLE_EQ(m.frequency_bins[1].high, 14.0);
  EXPECT_DOUBLE_EQ(m.frequency_bins[2].low, 15.0);
  EXPECT_TRUE(std::isinf(m.frequency_bins[2].high));
}

TEST(Bins, BothBinningsPartitionTheInstances) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ds = generated(seed);
    const auto m = evaluate(predict_all(ds, std::vector<ClassId>(ds.num_instances(), A)), ds);
    std::size_t amb = 0, fq = 0;
    double correct = 0;
    for (const auto& b : m.ambiguity_bins) {
      amb += b.n;
      if (b.accuracy) correct += *b.accuracy * b.n;
    }
    for (const auto& b : m.frequency_bins) fq += b.n;
    EXPECT_EQ(amb, m.n);
    EXPECT_EQ(fq, m.n);
    EXPECT_NEAR(correct / m.n, m.accuracy, 1e-12);
  }
}

TEST(Bins, PooledAccuracyWeighsBinsByCount) {
  std::vector<BinMetrics> bins{{0.0, 0.1, 2, 1.0, 1.0},
                               {0.1, 0.2, 0, std::nullopt, std::nullopt},
                               {0.2, 0.3, 6, 0.5, 0.5},
                               {0.3, 0.4, 4, 0.0, 0.0}};
  EXPECT_NEAR(*pooled_bin_accuracy(bins, 0.0, 0.3), (2.0 + 3.0) / 8.0, 1e-15);
  EXPECT_NEAR(*pooled_bin_accuracy(bins, 0.3, 1.0), 0.0, 1e-15);
  EXPECT_FALSE(pooled_bin_accuracy(bins, 0.1, 0.2).has_value());
}

TEST(Bins, InvalidConfigurationIsRejected) {
  const auto ds = make_dataset(2, 1, {GroupSpec{{{{0.0}, A}}, {A}}});
  EvalConfig cfg;
  cfg.ambiguity_bins = 0;
  EXPECT_THROW(evaluate(predict_truth(ds), ds, "m", cfg), ConfigError);
  cfg = {};
  cfg.frequency_edges = {14, 7};
  EXPECT_THROW(evaluate(predict_truth(ds), ds, "m", cfg), ConfigError);
}

// ---------------------------------------------------------------------------
// Output

EvalReport two_method_report() {
  const auto ds = generated(8, 40);
  EvalReport r;
  r.methods.push_back(evaluate(predict_truth(ds), ds, "oracle"));
  r.methods.push_back(evaluate(predict_all(ds, std::vector<ClassId>(ds.num_instances(), kNullClass)), ds, "null"));
  return r;
}

TEST(Output, CurvesCsvHasOneRowPerMethodAndBin) {
  const auto r = two_method_report();
  const auto amb = curves_csv(r, false);
  const auto fq = curves_csv(r, true);
  EXPECT_EQ(amb.substr(0, amb.find('\n')), "method,bin_low,bin_high,n,accuracy,f1");
  EXPECT_EQ(std::count(amb.begin(), amb.end(), '\n'), 1 + 2 * 10);
  EXPECT_EQ(std::count(fq.begin(), fq.end(), '\n'), 1 + 2 * 3);
  EXPECT_NE(fq.find(",15,inf,"), std::string::npos);
}

TEST(Output, ReportListsMethodsAndDocumentsTheF1Variant) {
  const auto r = two_method_report();
  const auto text = report_text(r);
  EXPECT_NE(text.find("null included"), std::string::npos);
  EXPECT_NE(text.find("oracle"), std::string::npos);
  EXPECT_NE(text.find("1.0000"), std::string::npos);
  const auto j = report_json(r);
  EXPECT_EQ(j["methods"].size(), 2u);
  EXPECT_EQ(j["methods"][0]["method"], "oracle");
  EXPECT_TRUE(j.contains("f1_variant"));
  ASSERT_NE(r.find("null"), nullptr);
  EXPECT_EQ(r.find("missing"), nullptr);
}

TEST(Output, WritingTwiceIsByteIdentical) {
  const auto r = two_method_report();
  const auto p1 = testing::temp_path("report_a.txt"), p2 = testing::temp_path("report_b.txt");
  write_report(r, p1);
  write_report(two_method_report(), p2);
  EXPECT_EQ(read_file(p1), read_file(p2));
  EXPECT_EQ(read_file(p1 + ".json"), read_file(p2 + ".json"));
  const auto c = testing::temp_path("curves.csv");
  write_curves(r, c);
  EXPECT_EQ(read_file(c), curves_csv(r, false));
  EXPECT_EQ(read_file(testing::temp_path("curves_frequency.csv")), curves_csv(r, true));
}

TEST(Output, FrequencyCurvesPathInsertsSuffixBeforeExtension) {
  EXPECT_EQ(frequency_curves_path("out/curves.csv"), "out/curves_frequency.csv");
  EXPECT_EQ(frequency_curves_path("curves"), "curves_frequency");
  EXPECT_EQ(frequency_curves_path("run.d/curves"), "run.d/curves_frequency");
}

}  // namespace
}  // namespace dbgae
