#include <gtest/gtest.h>

#include <sstream>

#include "scenegnn/experiments.hpp"
#include "support.hpp"

using namespace scenegnn;
using namespace scenegnn::experiments;

namespace {

gnn::ModelConfig tiny() {
  auto cfg = gnn::ModelConfig::defaults(gnn::Variant::GINLAF);
  cfg.hidden_dim = 6;
  cfg.num_layers = 2;
  return cfg;
}

training::TrainConfig short_run() {
  training::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  return cfg;
}

DatasetSplit small_split() { return split_dataset(test::separable_scenes(60, 1), {}, 1); }

training::Checkpoint small_checkpoint() {
  const auto split = small_split();
  return training::train(split.train, {}, tiny(), short_run());
}

}  // namespace

TEST(SweepBeta, OnePointPerBetaSorted) {
  const auto r = sweep_beta(tiny(), short_run(), small_split(), {0.2, 0.0, 0.1});
  ASSERT_EQ(r.points.size(), 3u);
  EXPECT_EQ(r.points[0].beta, 0.0);
  EXPECT_EQ(r.points[1].beta, 0.1);
  EXPECT_EQ(r.points[2].beta, 0.2);
  double best = 0;
  for (const auto& p : r.points) {
    EXPECT_GE(p.accuracy, 0.0);
    EXPECT_LE(p.accuracy, 1.0);
    best = std::max(best, p.accuracy);
  }
  for (const auto& p : r.points)
    if (p.beta == r.argmax_beta) EXPECT_EQ(p.accuracy, best);
}

TEST(SweepBeta, SingleBeta) {
  const auto r = sweep_beta(tiny(), short_run(), small_split(), {0.3});
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_EQ(r.argmax_beta, 0.3);
}

TEST(SweepBeta, RepeatedBetaGivesIdenticalAccuracy) {
  const auto r = sweep_beta(tiny(), short_run(), small_split(), {0.1, 0.5, 0.1});
  ASSERT_EQ(r.points.size(), 3u);
  EXPECT_EQ(r.points[0].beta, 0.1);
  EXPECT_EQ(r.points[1].beta, 0.1);
  EXPECT_EQ(r.points[0].accuracy, r.points[1].accuracy);
}

TEST(SweepBeta, RejectsBadBetas) {
  EXPECT_THROW(sweep_beta(tiny(), short_run(), small_split(), {}), Error);
  EXPECT_THROW(sweep_beta(tiny(), short_run(), small_split(), {0.1, -0.2}), Error);
}

TEST(Ablation, NestedSubsetsAndEmptyRows) {
  const auto ck = small_checkpoint();
  SyntheticConfig cfg;
  cfg.n_scenes = 120;
  cfg.max_distinct_labels = 4;
  cfg.seed = 2;
  const auto scenes = generate_synthetic(cfg);
  const auto rows = ablation_class_count(ck, scenes, {1, 2, 3, 4, 5, 6});
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].subset_size, scenes.size());
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].subset_size, rows[i - 1].subset_size);
  EXPECT_EQ(rows[5].subset_size, 0u);
  EXPECT_FALSE(rows[5].metrics.has_value());
  EXPECT_NE(rows[5].error.find("6"), std::string::npos);
  ASSERT_TRUE(rows[0].metrics.has_value());
  EXPECT_EQ(rows[0].metrics->count(), scenes.size());
}

TEST(Ablation, SubsetsMatchDistinctLabelCounts) {
  const auto ck = small_checkpoint();
  const auto scenes = small_split().test;
  const auto at_least = ablation_class_count(ck, scenes, {1, 2, 3});
  const auto exactly = ablation_class_count(ck, scenes, {1, 2, 3}, true);
  for (std::size_t i = 0; i < 3; ++i) {
    const int k = static_cast<int>(i) + 1;
    std::size_t ge = 0, eq = 0;
    for (const auto& s : scenes) {
      ge += distinct_labels(s) >= static_cast<std::size_t>(k);
      eq += distinct_labels(s) == static_cast<std::size_t>(k);
    }
    EXPECT_EQ(at_least[i].subset_size, ge);
    EXPECT_EQ(exactly[i].subset_size, eq);
  }
  EXPECT_THROW(ablation_class_count(ck, scenes, {0}), Error);
  EXPECT_THROW(ablation_class_count(ck, scenes, {}), Error);
}

TEST(Benchmark, CountsAndTiming) {
  const auto ck = small_checkpoint();
  const auto scenes = small_split().test;
  const auto report = benchmark({ck}, scenes);
  ASSERT_EQ(report.rows.size(), 1u);
  const auto& row = report.rows[0];
  EXPECT_EQ(row.param_count, param_count(ck.parameters));
  EXPECT_GT(row.inference_ms, 0.0);
  EXPECT_EQ(row.accuracy, training::evaluate(ck, scenes).accuracy);
  EXPECT_EQ(row.reference.params, 23712u);
  BenchmarkOptions full;
  full.full_pipeline = true;
  EXPECT_GT(benchmark({ck}, scenes, full).rows[0].inference_ms, 0.0);
  BenchmarkOptions too_few;
  too_few.timed_passes = 10;
  EXPECT_THROW(benchmark({ck}, scenes, too_few), Error);
  EXPECT_THROW(benchmark({}, scenes), Error);
}

TEST(Benchmark, Median) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Reports, FormatsAreWellFormed) {
  SweepResult r;
  r.points = {{0.0, 0.5}, {0.1, 0.75}};
  r.argmax_beta = 0.1;
  std::ostringstream csv, json, table;
  write_sweep(csv, r, Format::Csv, gnn::Variant::GINLAF);
  write_sweep(json, r, Format::Json, gnn::Variant::GINLAF);
  write_sweep(table, r, Format::Table, gnn::Variant::GINLAF);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "beta,test_accuracy");
  const auto j = nlohmann::json::parse(json.str());
  EXPECT_EQ(j["argmax_beta"].get<double>(), 0.1);
  EXPECT_EQ(j["points"].size(), 2u);
  EXPECT_NE(table.str().find("0.1"), std::string::npos);
  EXPECT_EQ(parse_format("json"), Format::Json);
  EXPECT_THROW(parse_format("xml"), Error);
}

TEST(Reference, PublishedValues) {
  EXPECT_EQ(reference::class_count_accuracy(gnn::Variant::GINLAF, 3), 0.9083);
  EXPECT_EQ(reference::class_count_accuracy(gnn::Variant::GINLAF, 6), 0.9196);
  EXPECT_FALSE(reference::class_count_accuracy(gnn::Variant::GINLAF, 2).has_value());
  EXPECT_EQ(reference::kOptimalBeta, 0.1);
}
