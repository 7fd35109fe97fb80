#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "wta/error.hpp"
#include "wta/trainer.hpp"

namespace wta {
namespace {

WtaParams desk(std::uint32_t d) { return WtaParams::desk_defaults(d, 3); }

TEST(LrSchedule, StepDecay) {
  TrainConfig c;
  c.learning_rate = 0.5;
  c.decay = 0.9;
  c.decay_interval = 10;
  EXPECT_DOUBLE_EQ(lr_schedule(0, c), 0.5);
  EXPECT_DOUBLE_EQ(lr_schedule(9, c), 0.5);
  EXPECT_DOUBLE_EQ(lr_schedule(10, c), 0.45);
  double previous = 1.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    EXPECT_LE(lr_schedule(s, c), previous);
    previous = lr_schedule(s, c);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(TrainConfig{}.resolved_rehash_batch(2500), 3u);
  EXPECT_EQ(TrainConfig{}.resolved_rehash_batch(10), 1u);
}

TEST(RehashCursor, ModularSweep) {
  RehashCursor cursor(10);
  EXPECT_EQ(cursor.take(3), (std::vector<ClassId>{0, 1, 2}));
  EXPECT_EQ(cursor.take(3), (std::vector<ClassId>{3, 4, 5}));
  EXPECT_EQ(cursor.take(3), (std::vector<ClassId>{6, 7, 8}));
  EXPECT_EQ(cursor.take(3), (std::vector<ClassId>{9, 0, 1}));
  EXPECT_EQ(cursor.next(), 2u);
  EXPECT_TRUE(cursor.take(0).empty());
}

TEST(RehashCursor, EveryIdRefreshedWithinSweepWindow) {
  for (std::uint32_t n : {7u, 10u, 33u}) {
    for (std::uint32_t b : {1u, 3u, 5u}) {
      RehashCursor cursor(n, 4);
      const std::uint32_t window = (n + b - 1) / b;
      std::vector<std::vector<ClassId>> steps;
      for (std::uint32_t s = 0; s < 3 * window; ++s) steps.push_back(cursor.take(b));
      for (std::size_t start = 0; start + window <= steps.size(); ++start) {
        std::set<ClassId> seen;
        for (std::size_t s = start; s < start + window; ++s) seen.insert(steps[s].begin(), steps[s].end());
        EXPECT_EQ(seen.size(), n);
      }
    }
  }
}

TEST(Trainer, ZeroGradientLeavesModelUnchanged) {
  Dataset data(4, 1);
  const std::vector<float> x{1, 2, 3, 4};
  data.add(x, std::vector<ClassId>{0});
  const auto params = desk(4);
  auto p = params;
  p.window = 4;
  p.permutations = 8;
  p.bands = 4;
  TrainConfig c;
  c.rehash_batch = 0;
  c.batch_size = 2;
  Trainer t(make_model(LayerKind::kWta, OutputMode::kSoftmax, 1, 4, 1, &p), c);
  const auto before = t.model().weights;
  const auto index_before = *t.model().index;
  const auto m = t.step(data, t.next_batch(data.size()));
  EXPECT_EQ(m.loss, 0.0);
  EXPECT_EQ(t.model().weights, before);
  EXPECT_TRUE(t.model().index->equivalent(index_before));
}

TEST(Trainer, UpdatesOnlyRetrievedPositiveAndRefreshedRows) {
  const auto data = gen_clustered(200, 16, 4, 0.3, 5);
  const auto p = desk(16);
  TrainConfig c;
  c.learning_rate = 0.5;
  c.top_k = 5;
  c.batch_size = 8;
  c.rehash_batch = 3;
  Trainer t(make_model(LayerKind::kWta, OutputMode::kSoftmax, 200, 16, 2, &p), c);
  for (int s = 0; s < 20; ++s) {
    const auto batch = t.next_batch(data.size());
    std::set<ClassId> allowed;
    for (auto r : batch) {
      const auto x = data.features_f64(r);
      for (const auto& cand : t.model().index->query(std::span<const double>(x), c.top_k)) allowed.insert(cand.id);
      for (auto l : data.labels(r)) allowed.insert(l);
    }
    const auto before = t.model().weights;
    const auto m = t.step(data, batch);
    std::size_t changed = 0;
    for (ClassId j = 0; j < 200; ++j) {
      const auto a = before.row(j);
      const auto b = t.model().weights.row(j);
      if (!std::equal(a.begin(), a.end(), b.begin())) {
        ++changed;
        EXPECT_TRUE(allowed.count(j)) << "row " << j << " changed at step " << s;
      }
    }
    EXPECT_LE(changed, m.rows_updated);
    EXPECT_GT(m.mean_active, 0.0);
  }
}

TEST(Trainer, TouchedRowsAreReindexedImmediately) {
  const auto data = gen_clustered(100, 16, 4, 0.3, 6);
  const auto p = desk(16);
  TrainConfig c;
  c.learning_rate = 0.3;
  c.top_k = 10;
  c.rehash_batch = 0;
  Trainer t(make_model(LayerKind::kWta, OutputMode::kSoftmax, 100, 16, 3, &p), c);
  for (int s = 0; s < 10; ++s) {
    t.step(data, t.next_batch(data.size()));
    EXPECT_TRUE(t.model().index->equivalent(LshIndex::build(t.model().weights, p)));
  }
}

TEST(Trainer, SweepRepairsAStaleIndex) {
  const auto data = gen_clustered(50, 16, 4, 0.3, 7);
  const auto p = desk(16);
  TrainConfig c;
  c.learning_rate = 0.3;
  c.top_k = 5;
  c.rehash_batch = 7;
  auto model = make_model(LayerKind::kWta, OutputMode::kSoftmax, 50, 16, 4, &p);
  Rng rng(8);
  for (auto& v : model.weights.weights()) v += rng.normal();  // index now describes old weights
  Trainer t(std::move(model), c);
  ASSERT_FALSE(t.model().index->equivalent(LshIndex::build(t.model().weights, p)));
  for (int s = 0; s < 8; ++s) t.step(data, t.next_batch(data.size()));  // ceil(50 / 7) = 8
  EXPECT_TRUE(t.model().index->equivalent(LshIndex::build(t.model().weights, p)));
}

TEST(Trainer, ExactStepIsMeanGradientDescent) {
  const auto data = gen_clustered(6, 4, 2, 0.2, 9);
  TrainConfig c;
  c.learning_rate = 0.7;
  c.momentum = 0.0;
  c.batch_size = 3;
  Trainer t(make_model(LayerKind::kExact, OutputMode::kSoftmax, 6, 4, 5), c);
  const auto w0 = t.model().weights;
  const auto batch = t.next_batch(data.size());
  t.step(data, batch);
  for (ClassId j = 0; j < 6; ++j) {
    for (std::size_t k = 0; k < 4; ++k) {
      long double g = 0;
      for (auto r : batch) {
        const auto x = data.features_f64(r);
        const auto p = exact_softmax_forward(x, w0);
        const double target = data.labels(r)[0] == j ? 1.0 : 0.0;
        g += (p[j] - target) * x[k];
      }
      g /= batch.size();
      EXPECT_NEAR(t.model().weights.row(j)[k], w0.row(j)[k] - 0.7 * double(g), 1e-12);
    }
  }
}

TEST(Trainer, MomentumAccumulatesVelocity) {
  Dataset data(1, 2);
  const std::vector<float> x{1};
  data.add(x, std::vector<ClassId>{0});
  TrainConfig c;
  c.learning_rate = 1.0;
  c.momentum = 0.5;
  c.batch_size = 1;
  auto model = make_model(LayerKind::kExact, OutputMode::kSoftmax, 2, 1, 1);
  model.weights.row(0)[0] = 0.0;
  model.weights.row(1)[0] = 0.0;
  Trainer t(std::move(model), c);
  t.step(data, t.next_batch(1));
  // p = (0.5, 0.5): g0 = -0.5, v0 = 0.5, w0 = 0.5
  EXPECT_DOUBLE_EQ(t.model().weights.row(0)[0], 0.5);
  const double p0 = 1.0 / (1.0 + std::exp(-1.0));  // logits (0.5, -0.5)
  t.step(data, t.next_batch(1));
  EXPECT_NEAR(t.model().weights.row(0)[0], 0.5 + (0.5 * 0.5 + (1.0 - p0)), 1e-15);
}

TEST(Trainer, DeterministicTrajectory) {
  const auto data = gen_clustered(80, 16, 5, 0.3, 10);
  const auto p = desk(16);
  TrainConfig c;
  c.learning_rate = 0.2;
  c.top_k = 10;
  auto run = [&] {
    Trainer t(make_model(LayerKind::kWta, OutputMode::kSoftmax, 80, 16, 6, &p), c);
    std::vector<double> losses;
    for (int s = 0; s < 30; ++s) losses.push_back(t.step(data, t.next_batch(data.size())).loss);
    return std::make_pair(t.model().weights, losses);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Trainer, AllLayerKindsReduceLoss) {
  const auto data = gen_clustered(20, 16, 10, 0.1, 11);
  const auto p = desk(16);
  for (auto kind : {LayerKind::kExact, LayerKind::kWta, LayerKind::kHierarchical}) {
    for (auto mode : {OutputMode::kSoftmax, OutputMode::kLogistic}) {
      if (kind == LayerKind::kHierarchical && mode == OutputMode::kLogistic) continue;
      TrainConfig c;
      c.learning_rate = 0.5;
      c.top_k = 10;
      c.batch_size = 16;
      Trainer t(make_model(kind, mode, 20, 16, 7, &p), c);
      double first = 0, last = 0;
      for (int s = 0; s < 200; ++s) {
        const double loss = t.step(data, t.next_batch(data.size())).loss;
        if (s < 10) first += loss;
        if (s >= 190) last += loss;
      }
      EXPECT_LT(last, 0.7 * first) << to_string(kind) << "/" << to_string(mode);
    }
  }
}

TEST(Trainer, RejectsMismatchedData) {
  const auto p = desk(16);
  Trainer t(make_model(LayerKind::kWta, OutputMode::kSoftmax, 10, 16, 1, &p), TrainConfig{});
  const auto wrong_dim = gen_clustered(5, 8, 2, 0.1, 1);
  EXPECT_THROW(t.step(wrong_dim, t.next_batch(wrong_dim.size())), DimensionError);
  const auto too_many = gen_clustered(12, 16, 2, 0.1, 1);
  EXPECT_THROW(t.step(too_many, t.next_batch(too_many.size())), UsageError);
}

TEST(Trainer, NextBatchVisitsEveryExamplePerEpoch) {
  TrainConfig c;
  c.batch_size = 4;
  const auto p = desk(16);
  Trainer t(make_model(LayerKind::kWta, OutputMode::kSoftmax, 3, 16, 1, &p), c);
  std::vector<int> hits(12, 0);
  for (int s = 0; s < 3; ++s) {
    for (auto r : t.next_batch(12)) ++hits[r];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
}  // namespace wta
