#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wta/dataset.hpp"
#include "wta/model.hpp"
#include "wta/wta_hash.hpp"

namespace wta {

/// Median and interquartile range of a sample, in the sample's unit.
struct LatencySummary {
  double median = 0.0;
  double iqr = 0.0;
};
LatencySummary summarize(std::vector<double> samples);

/// Smallest observable steady_clock increment, in milliseconds.
double timer_resolution_ms();

struct BenchRow {
  std::string kind;  // exact | wta | hs | wta_build
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::size_t batch = 0;
  std::size_t top_k = 0;
  std::size_t reps = 0;
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  double speedup = 0.0;            // exact median / this median at the same (N, d, batch)
  double accuracy_fraction = 0.0;  // NaN when not applicable
  bool reliable = true;
};

struct BenchReport {
  std::string timestamp;
  std::string config_hash;
  std::vector<BenchRow> rows;

  /// Header lines start with '#'; column order:
  /// kind,N,d,batch,K,reps,median_ms,iqr_ms,speedup,accuracy_fraction,reliable
  void write_csv(std::ostream& out) const;
  const BenchRow* find(const std::string& kind, std::size_t batch, std::size_t top_k) const;
};

struct ForwardBenchConfig {
  std::size_t num_classes = 10000;
  std::size_t dim = 256;
  std::vector<std::size_t> batch_sizes{1, 8, 32};
  std::vector<std::size_t> top_k_values{30, 300, 3000};
  std::size_t repetitions = 30;
  std::size_t warmup = 3;
  std::size_t agreement_queries = 100;
  bool include_hs = false;
  unsigned exact_threads = 1;
  WtaParams wta;  // dim is overwritten with `dim`
  std::uint64_t seed = 1;

  std::string describe() const;
};

/// Output-layer-only latency of exact softmax, WTA softmax and optionally
/// greedy hierarchical softmax over random weights. The WTA accuracy fraction
/// is the rate at which its top class agrees with the exact top class on
/// queries drawn near random class vectors.
BenchReport bench_forward(const ForwardBenchConfig& config);

struct TradeoffRow {
  std::size_t top_k = 0;
  double accuracy = 0.0;
  double baseline_accuracy = 0.0;
  double accuracy_fraction = 0.0;
  double wta_median_ms = 0.0;
  double exact_median_ms = 0.0;
  double speedup = 0.0;
  double miss_rate = 0.0;
  double mean_active = 0.0;
};

struct TradeoffReport {
  std::string timestamp;
  std::string config_hash;
  double index_build_ms = 0.0;
  std::vector<TradeoffRow> rows;

  /// Column order:
  /// K,accuracy,baseline_accuracy,accuracy_fraction,wta_median_ms,exact_median_ms,speedup,miss_rate,mean_active
  void write_csv(std::ostream& out) const;
  /// Accuracy fraction and speedup against K on a log axis.
  void write_svg(std::ostream& out) const;
};

/// Approximates an already trained exact model with WTA retrieval at each K
/// of the grid and compares with the exact model on `data`.
TradeoffReport bench_tradeoff(const ParamMatrix& weights, const Dataset& data, const std::vector<std::size_t>& k_grid,
                              const WtaParams& params);

std::uint64_t fnv1a64(const std::string& text);
std::string utc_timestamp();

}  // namespace wta
