#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "wta/error.hpp"
#include "wta/metrics.hpp"

namespace wta {
namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "wta_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(GenClustered, ZeroSpreadGivesCenters) {
  const auto d = gen_clustered(4, 6, 3, 0.0, 1);
  ASSERT_EQ(d.size(), 12u);
  for (std::size_t i = 0; i < d.size(); i += 3) {
    const auto a = d.features(i);
    for (std::size_t j = 1; j < 3; ++j) {
      const auto b = d.features(i + j);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
      EXPECT_EQ(d.labels(i + j)[0], d.labels(i)[0]);
    }
    double norm = 0;
    for (float v : a) norm += double(v) * v;
    EXPECT_NEAR(norm, 1.0, 1e-6);
  }
}

TEST(GenClustered, CountsAndDeterminism) {
  const auto d = gen_clustered(3, 5, 1, 0.2, 9);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d, gen_clustered(3, 5, 1, 0.2, 9));
  EXPECT_FALSE(d == gen_clustered(3, 5, 1, 0.2, 10));
  EXPECT_THROW(gen_clustered(0, 5, 1, 0.2, 9), ConfigError);
  EXPECT_THROW(gen_clustered(3, 5, 1, -0.1, 9), ConfigError);
}

TEST(GenClustered, InClassVarianceGrowsWithSpread) {
  double previous = -1;
  for (double spread : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    const auto d = gen_clustered(20, 16, 10, spread, 3);
    const auto v = in_class_variance(d);
    const double mean = std::accumulate(v.variance.begin(), v.variance.end(), 0.0) / double(v.variance.size());
    EXPECT_GT(mean, previous);
    // Expected mean squared distance to the sample centroid: d * spread^2 * (n-1)/n.
    EXPECT_NEAR(mean, 16 * spread * spread * 0.9, 0.2 * 16 * spread * spread + 1e-12);
    previous = mean;
  }
}

TEST(SplitPerClass, MovesTailExamples) {
  const auto d = gen_clustered(5, 4, 4, 0.1, 2);
  const auto [train, test] = split_per_class(d, 1);
  EXPECT_EQ(train.size(), 15u);
  EXPECT_EQ(test.size(), 5u);
  for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(test.labels(i)[0], i);
}

TEST(DatasetIo, BinaryAndTextRoundTrip) {
  Dataset d(3, 5);
  const std::vector<float> a{0.1f, -2.5f, 3.25f}, b{1e-7f, 4.0f, -0.0f};
  d.add(a, std::vector<ClassId>{0, 4});
  d.add(b, std::vector<ClassId>{});
  d.add(a, std::vector<ClassId>{2});
  const auto bin = temp_file("d.bin");
  save_dataset_binary(d, bin);
  EXPECT_EQ(load_dataset(bin), d);
  const auto txt = temp_file("d.txt");
  save_dataset_text(d, txt);
  const auto back = load_dataset(txt);
  EXPECT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto x = d.features(i), y = back.features(i);
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
    EXPECT_TRUE(std::ranges::equal(d.labels(i), back.labels(i)));
  }
  const auto gen = gen_clustered(7, 9, 3, 0.3, 4);
  save_dataset_binary(gen, bin);
  const auto gen_back = load_dataset(bin);
  EXPECT_EQ(gen_back, gen);
  EXPECT_EQ(gen_back.generator(), gen.generator());
}

TEST(DatasetIo, HandWrittenTextFixture) {
  const auto path = temp_file("fixture.txt");
  std::ofstream(path) << "# two examples\nwta-dataset 1 2 3\n0 1.5 -2\n1,2 0 0.25\n- 3 3\n";
  const auto d = load_dataset(path);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.features(0)[0], 1.5f);
  EXPECT_EQ(d.labels(1).size(), 2u);
  EXPECT_TRUE(d.labels(2).empty());
}

TEST(DatasetIo, RejectsBadFiles) {
  const auto path = temp_file("bad.txt");
  std::ofstream(path) << "wta-dataset 1 2 3\n0 1.5\n";
  EXPECT_THROW(load_dataset(path), IoError);
  std::ofstream(path, std::ios::trunc) << "wta-dataset 1 2 3\n7 1 2\n";
  EXPECT_THROW(load_dataset(path), IoError);
  EXPECT_THROW(load_dataset(temp_file("missing.bin")), IoError);
}

TEST(Dataset, AddValidates) {
  Dataset d(2, 3);
  const std::vector<float> ok{1, 2}, bad{1, NAN}, wrong{1};
  EXPECT_THROW(d.add(wrong, std::vector<ClassId>{0}), DimensionError);
  EXPECT_THROW(d.add(bad, std::vector<ClassId>{0}), InputError);
  EXPECT_THROW(d.add(ok, std::vector<ClassId>{3}), UsageError);
}

TEST(Precision, PerfectAndDisjoint) {
  const std::vector<std::vector<ClassId>> ranked{{1, 2}, {3, 4}};
  const std::vector<std::vector<ClassId>> truth{{1}, {3}};
  EXPECT_DOUBLE_EQ(precision_at_k(ranked, truth, 1).value, 1.0);
  const std::vector<std::vector<ClassId>> other{{9}, {8}};
  EXPECT_DOUBLE_EQ(precision_at_k(ranked, other, 1).value, 0.0);
  EXPECT_DOUBLE_EQ(precision_at_k(ranked, other, 2).value, 0.0);
}

TEST(Precision, HandEnumeratedCase) {
  // Example 1: truth {2,5,7}; top-1 {4} -> 0; top-2 {4,5} -> 1/2; top-3 {4,5,7} -> 2/3.
  // Example 2: truth {1}; top-1 {0} -> 0; top-2 {0,1} -> 1; top-3 -> 1.
  // Example 3: empty truth, skipped.
  const std::vector<std::vector<ClassId>> ranked{{4, 5, 7, 2}, {0, 1, 9}, {3}};
  const std::vector<std::vector<ClassId>> truth{{2, 5, 7}, {1}, {}};
  const auto p1 = precision_at_k(ranked, truth, 1);
  EXPECT_DOUBLE_EQ(p1.value, 0.0);
  EXPECT_EQ(p1.evaluated, 2u);
  EXPECT_EQ(p1.skipped, 1u);
  EXPECT_DOUBLE_EQ(precision_at_k(ranked, truth, 2).value, (0.5 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(precision_at_k(ranked, truth, 3).value, (2.0 / 3.0 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(precision_at_k(ranked, truth, 4).value, 1.0);
  EXPECT_THROW(precision_at_k(ranked, truth, 0), UsageError);
}

TEST(Precision, MonotoneInK) {
  Rng rng(3);
  std::vector<std::vector<ClassId>> ranked, truth;
  for (int i = 0; i < 200; ++i) {
    std::vector<ClassId> perm(20);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t j = perm.size(); j > 1; --j) std::swap(perm[j - 1], perm[rng.bounded(j)]);
    ranked.push_back(perm);
    std::vector<ClassId> t;
    for (ClassId c = 0; c < 20; ++c) {
      if (rng.uniform() < 0.15) t.push_back(c);
    }
    truth.push_back(t);
  }
  double previous = 0;
  for (std::size_t k = 1; k <= 20; ++k) {
    const double v = precision_at_k(ranked, truth, k).value;
    EXPECT_GE(v, previous - 1e-15);
    EXPECT_LE(v, 1.0);
    previous = v;
  }
}

TEST(Top1Accuracy, CountsHitsAgainstAnyLabel) {
  Dataset d(1, 4);
  const std::vector<float> x{0};
  d.add(x, std::vector<ClassId>{1, 2});
  d.add(x, std::vector<ClassId>{3});
  d.add(x, std::vector<ClassId>{0});
  const std::vector<ClassId> pred{2, 0, kNoPrediction};
  EXPECT_DOUBLE_EQ(top1_accuracy(pred, d), 1.0 / 3.0);
}

TEST(InClassVariance, AnalyticCases) {
  Dataset d(2, 3);
  const std::vector<float> a{1, 1}, b{3, 1}, c{5, 5};
  d.add(a, std::vector<ClassId>{0});
  d.add(a, std::vector<ClassId>{0});
  d.add(a, std::vector<ClassId>{1});
  d.add(b, std::vector<ClassId>{1});
  d.add(c, std::vector<ClassId>{2});
  const auto v = in_class_variance(d);
  ASSERT_EQ(v.classes, (std::vector<ClassId>{0, 1}));
  EXPECT_DOUBLE_EQ(v.variance[0], 0.0);
  EXPECT_DOUBLE_EQ(v.variance[1], 1.0);  // distance 2a with a = 1
  EXPECT_EQ(v.skipped, 1u);
}

TEST(InClassVariance, MatchesTwoPassOracle) {
  const auto d = gen_clustered(6, 5, 7, 0.7, 12);
  const auto v = in_class_variance(d);
  for (std::size_t i = 0; i < v.classes.size(); ++i) {
    const ClassId c = v.classes[i];
    std::vector<long double> mean(5, 0.0L);
    std::size_t n = 0;
    for (std::size_t e = 0; e < d.size(); ++e) {
      if (d.labels(e)[0] != c) continue;
      for (std::size_t k = 0; k < 5; ++k) mean[k] += d.features(e)[k];
      ++n;
    }
    for (auto& m : mean) m /= n;
    long double ss = 0;
    for (std::size_t e = 0; e < d.size(); ++e) {
      if (d.labels(e)[0] != c) continue;
      for (std::size_t k = 0; k < 5; ++k) ss += (d.features(e)[k] - mean[k]) * (d.features(e)[k] - mean[k]);
    }
    EXPECT_NEAR(v.variance[i], double(ss / n), 1e-12);
  }
  std::size_t total = 0;
  for (auto c : v.histogram.counts) total += c;
  EXPECT_EQ(total, v.classes.size());
}

TEST(Histogram, BinsCoverRange) {
  const std::vector<double> values{0, 1, 2, 3, 4};
  const auto h = make_histogram(values, 2);
  ASSERT_EQ(h.edges.size(), 3u);
  EXPECT_DOUBLE_EQ(h.edges.front(), 0.0);
  EXPECT_DOUBLE_EQ(h.edges.back(), 4.0);
  EXPECT_EQ(h.counts[0] + h.counts[1], 5u);
  EXPECT_THROW(make_histogram(values, 0), UsageError);
}

}  // namespace
}  // namespace wta
