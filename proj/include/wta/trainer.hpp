#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wta/dataset.hpp"
#include "wta/layers.hpp"
#include "wta/model.hpp"
#include "wta/rng.hpp"

namespace wta {

struct TrainConfig {
  double learning_rate = 0.001;
  double decay = 0.96;                // multiplier applied every decay_interval steps
  std::uint64_t decay_interval = 1000;
  double momentum = 0.9;
  std::uint32_t batch_size = 32;
  std::uint32_t top_k = 100;          // retrieved classes per example
  std::optional<std::uint32_t> rehash_batch;  // B; defaults to ceil(N / 1000)
  bool refresh_touched = true;        // re-index updated rows in the same step
  std::uint64_t steps = 1000;
  std::uint64_t seed = 1;

  void validate() const;
  std::uint32_t resolved_rehash_batch(std::size_t num_classes) const;
};

/// lr0 * decay^floor(step / decay_interval).
double lr_schedule(std::uint64_t step, const TrainConfig& config);

/// Round-robin position over [0, N).
class RehashCursor {
 public:
  explicit RehashCursor(std::size_t num_classes = 1, std::uint64_t next = 0);

  std::uint64_t next() const { return next_; }
  /// The following `count` ids (wrapping), advancing the cursor by count mod N.
  std::vector<ClassId> take(std::uint32_t count);

 private:
  std::size_t num_classes_;
  std::uint64_t next_;
};

struct StepMetrics {
  std::uint64_t step = 0;      // index of the step just taken
  double loss = 0.0;           // mean over examples with a non-empty active set
  double lr = 0.0;
  std::uint64_t misses = 0;    // examples whose active set was empty
  double miss_rate = 0.0;
  double mean_active = 0.0;    // mean active-set size (WTA) / classes touched per example
  std::size_t rows_updated = 0;
};

/// Per-row storage materialised on first touch.
class LazyRows {
 public:
  LazyRows(std::size_t rows = 0, std::size_t dim = 0);

  bool has(std::size_t row) const { return slot_[row] >= 0; }
  std::span<Real> get(std::size_t row);  // zero-initialised on first use
  std::size_t materialised() const { return rows_.size(); }
  const std::vector<ClassId>& touched() const { return touched_; }
  /// Zeroes the rows touched since the last clear and forgets them.
  void clear();
  /// Forgets the touched list but keeps row contents.
  void clear_touched_only();

 private:
  std::size_t dim_;
  std::vector<std::int64_t> slot_;
  std::vector<std::uint8_t> touched_mark_;
  std::vector<ClassId> touched_;
  std::vector<std::vector<Real>> rows_;
};

/// Single-process SGD with classical momentum applied to touched rows only.
class Trainer {
 public:
  Trainer(Model model, TrainConfig config);

  /// One update from the examples `rows` of `data`.
  StepMetrics step(const Dataset& data, std::span<const std::size_t> rows);

  /// Next batch of an epoch-wise shuffled pass over `num_examples`.
  std::vector<std::size_t> next_batch(std::size_t num_examples);

  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  std::uint64_t steps_taken() const { return step_; }
  const RehashCursor& cursor() const { return cursor_; }
  void set_progress(std::uint64_t step, std::uint64_t cursor);

 private:
  StepMetrics step_wta(const Dataset& data, std::span<const std::size_t> rows, double lr);
  StepMetrics step_exact(const Dataset& data, std::span<const std::size_t> rows, double lr);
  StepMetrics step_hs(const Dataset& data, std::span<const std::size_t> rows, double lr);
  void apply_momentum(ParamMatrix& params, LazyRows& velocity, LazyRows& grads, LazyRows* bias_grads,
                      LazyRows* bias_velocity, double lr);

  Model model_;
  TrainConfig config_;
  std::uint32_t rehash_batch_;
  RehashCursor cursor_;
  std::uint64_t step_ = 0;
  LazyRows velocity_;
  LazyRows bias_velocity_;
  LazyRows grads_;
  LazyRows bias_grads_;
  QueryScratch scratch_;
  Rng shuffle_rng_;
  std::vector<std::size_t> order_;
  std::size_t order_pos_ = 0;
};

}  // namespace wta
