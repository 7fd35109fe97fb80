#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "wta/lsh_index.hpp"
#include "wta/param_matrix.hpp"
#include "wta/types.hpp"

namespace wta {

/// Probabilities of the active classes of one example; every other class has
/// probability zero.
struct SparseActivation {
  OutputMode mode = OutputMode::kSoftmax;
  std::vector<ClassId> ids;
  std::vector<Real> logits;  // x . w_j (+ bias_j in logistic mode)
  std::vector<Real> probs;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

/// Per-class weight gradients for the active rows plus the input gradient.
struct SparseGradient {
  std::vector<ClassId> ids;
  std::vector<Real> rows;       // ids.size() x dim, row-major
  std::vector<Real> bias;       // logistic mode only, one per id
  std::vector<Real> input;      // dL/dx
  Real loss = 0.0;

  std::span<const Real> row(std::size_t i, std::size_t dim) const { return {rows.data() + i * dim, dim}; }
};

/// Counters shared by concurrent forward passes.
struct RetrievalStats {
  std::atomic<std::uint64_t> queries{0};
  std::atomic<std::uint64_t> misses{0};  // active set was empty
  std::atomic<std::uint64_t> active_total{0};

  double miss_rate() const;
  void reset();
};

/// Target weights over the active set, as (class id, weight) pairs.
using Targets = std::vector<std::pair<ClassId, Real>>;

/// Dense softmax over all rows of W with max-logit subtraction.
std::vector<Real> exact_softmax_forward(std::span<const Real> x, const ParamMatrix& weights);

/// Logits for a batch: `xs` is batch x dim row-major; the result is
/// batch x rows row-major. `threads` > 1 splits the class rows across threads.
std::vector<Real> exact_logits_batch(std::span<const Real> xs, std::size_t batch, const ParamMatrix& weights,
                                     unsigned threads = 1);

/// E^T X for a batch: `errors` is batch x rows, `xs` batch x dim; the result
/// is rows x dim row-major.
std::vector<Real> dense_weight_gradient(std::span<const Real> errors, std::span<const Real> xs, std::size_t batch,
                                        std::size_t rows, std::size_t dim);

/// Softmax of every row of a batch x n logit matrix, in place.
void softmax_rows_inplace(std::span<Real> logits, std::size_t batch);

/// Active set = query(index, x, top_k) followed by any positives not already
/// retrieved; probabilities are the softmax restricted to that set. An empty
/// active set yields an empty activation and counts a miss in `stats`.
SparseActivation sparse_softmax_forward(std::span<const Real> x, const ParamMatrix& weights, const LshIndex& index,
                                        std::size_t top_k, std::span<const ClassId> positives = {},
                                        RetrievalStats* stats = nullptr, QueryScratch* scratch = nullptr);

/// Same active set, independent sigmoid(x . w_j + bias_j) per class.
SparseActivation sparse_logistic_forward(std::span<const Real> x, const ParamMatrix& weights, const LshIndex& index,
                                         std::size_t top_k, std::span<const ClassId> positives = {},
                                         RetrievalStats* stats = nullptr, QueryScratch* scratch = nullptr);

/// Evaluates the activation of an explicit active set (no retrieval).
SparseActivation restricted_forward(std::span<const Real> x, const ParamMatrix& weights,
                                    std::span<const ClassId> active, OutputMode mode);

/// Cross-entropy (softmax) or summed Bernoulli log-loss (logistic) gradients
/// over the active set: dL/dw_j = (p_j - t_j) x, dL/dx = sum_j (p_j - t_j) w_j.
/// Softmax targets must sum to one. Targets on inactive ids are a UsageError.
SparseGradient sparse_backward(const SparseActivation& act, std::span<const Real> x, const Targets& targets,
                               const ParamMatrix& weights);

/// Uniform target distribution over `labels` (softmax) or indicator targets
/// (logistic).
Targets make_targets(std::span<const ClassId> labels, OutputMode mode);

Real log_sigmoid(Real z);
Real sigmoid(Real z);

}  // namespace wta
