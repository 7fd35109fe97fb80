#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "wta/bench.hpp"
#include "wta/error.hpp"
#include "wta/trainer.hpp"

namespace wta {
namespace {

TEST(Summarize, MedianAndInterquartileRange) {
  const auto s = summarize({5, 1, 4, 2, 3});
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.iqr, 2.0);  // quartiles 2 and 4
  const auto even = summarize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.iqr, 1.5);
}

TEST(Fnv1a, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

ForwardBenchConfig small_config() {
  ForwardBenchConfig c;
  c.num_classes = 400;
  c.dim = 32;
  c.batch_sizes = {1, 4};
  c.top_k_values = {10, 400};
  c.repetitions = 30;
  c.warmup = 2;
  c.agreement_queries = 20;
  c.include_hs = true;
  c.wta = WtaParams::desk_defaults(32);
  return c;
}

TEST(BenchForward, RowStructureAndSpeedupArithmetic) {
  const auto cfg = small_config();
  const auto report = bench_forward(cfg);
  // build row + per batch: exact, wta x 2, hs
  ASSERT_EQ(report.rows.size(), 1u + 2u * 4u);
  EXPECT_EQ(report.rows[0].kind, "wta_build");
  for (std::size_t batch : cfg.batch_sizes) {
    const auto* exact = report.find("exact", batch, cfg.num_classes);
    ASSERT_NE(exact, nullptr);
    EXPECT_DOUBLE_EQ(exact->speedup, 1.0);
    for (std::size_t k : cfg.top_k_values) {
      const auto* row = report.find("wta", batch, k);
      ASSERT_NE(row, nullptr);
      EXPECT_EQ(row->reps, 30u);
      EXPECT_GT(row->median_ms, 0.0);
      EXPECT_DOUBLE_EQ(row->speedup, exact->median_ms / row->median_ms);
      EXPECT_GE(row->accuracy_fraction, 0.0);
      EXPECT_LE(row->accuracy_fraction, 1.0);
    }
    EXPECT_NE(report.find("hs", batch, 0), nullptr);
  }
  EXPECT_EQ(report.config_hash, bench_forward(cfg).config_hash);
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(report.config_hash, bench_forward(other).config_hash);

  std::ostringstream csv;
  report.write_csv(csv);
  const std::string text = csv.str();
  EXPECT_NE(text.find("kind,N,d,batch,K,reps,median_ms,iqr_ms,speedup,accuracy_fraction,reliable\n"),
            std::string::npos);
  EXPECT_EQ(text.rfind("# timestamp=", 0), 0u);
}

TEST(BenchForward, RequiresThirtyRepetitions) {
  auto cfg = small_config();
  cfg.repetitions = 29;
  EXPECT_THROW(bench_forward(cfg), ConfigError);
}

TEST(BenchForward, ExactLatencyScalesRoughlyLinearlyInN) {
  auto cfg = small_config();
  cfg.dim = 64;
  cfg.wta = WtaParams::desk_defaults(64);
  cfg.batch_sizes = {8};
  cfg.top_k_values = {10};
  cfg.include_hs = false;
  cfg.agreement_queries = 0;
  cfg.num_classes = 4000;
  const double small = bench_forward(cfg).find("exact", 8, 4000)->median_ms;
  cfg.num_classes = 40000;
  const double large = bench_forward(cfg).find("exact", 8, 40000)->median_ms;
  const double slope = std::log10(large / small);
  EXPECT_GE(slope, 0.5);
  EXPECT_LE(slope, 2.0);
}

TEST(BenchTradeoff, FullRetrievalMatchesBaseline) {
  const auto all = gen_clustered(50, 64, 6, 0.05, 3);
  const auto [train, test] = split_per_class(all, 2);
  TrainConfig c;
  c.learning_rate = 0.5;
  c.batch_size = 16;
  Trainer t(make_model(LayerKind::kExact, OutputMode::kSoftmax, 50, 64, 4), c);
  for (int s = 0; s < 300; ++s) t.step(train, t.next_batch(train.size()));
  const auto report = bench_tradeoff(t.model().weights, test, {5, 50}, WtaParams::full_defaults(64));
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].top_k, 5u);
  EXPECT_GT(report.rows[0].baseline_accuracy, 0.5);
  EXPECT_GE(report.rows[1].accuracy_fraction, 0.99);
  EXPECT_GE(report.rows[1].accuracy_fraction, report.rows[0].accuracy_fraction);
  std::ostringstream csv, svg;
  report.write_csv(csv);
  report.write_svg(svg);
  EXPECT_NE(csv.str().find("K,accuracy,baseline_accuracy"), std::string::npos);
  EXPECT_NE(svg.str().find("<polyline"), std::string::npos);
}

}  // namespace
}  // namespace wta
