#include "wta/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "wta/error.hpp"

namespace wta {

namespace {

void check_dim(std::span<const Real> x, const ParamMatrix& weights, const char* op) {
  if (x.size() != weights.dim()) {
    throw DimensionError(std::string(op) + ": input has " + std::to_string(x.size()) + " elements, weights have dim " +
                         std::to_string(weights.dim()));
  }
}

void softmax_inplace(std::span<Real> z) {
  if (z.empty()) return;
  Real max_logit = z[0];
  for (Real v : z) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
    max_logit = std::max(max_logit, v);
  }
  Real sum = 0.0;
  for (Real& v : z) {
    v = std::exp(v - max_logit);
    sum += v;
  }
  const Real inv = 1.0 / sum;
  for (Real& v : z) v *= inv;
}

SparseActivation sparse_forward(std::span<const Real> x, const ParamMatrix& weights, const LshIndex& index,
                                std::size_t top_k, std::span<const ClassId> positives, RetrievalStats* stats,
                                QueryScratch* scratch, OutputMode mode) {
  check_dim(x, weights, "sparse_forward");
  for (ClassId p : positives) {
    if (p >= weights.rows()) throw UsageError("sparse_forward: positive label " + std::to_string(p) + " out of range");
  }
  QueryScratch local;
  const CandidateSet candidates = index.query(x, top_k, scratch != nullptr ? *scratch : local);

  std::vector<ClassId> active;
  active.reserve(candidates.size() + positives.size());
  for (const Candidate& c : candidates) active.push_back(c.id);
  for (ClassId p : positives) {
    if (std::find(active.begin(), active.end(), p) == active.end()) active.push_back(p);
  }
  if (stats != nullptr) {
    stats->queries.fetch_add(1, std::memory_order_relaxed);
    stats->active_total.fetch_add(active.size(), std::memory_order_relaxed);
    if (active.empty()) stats->misses.fetch_add(1, std::memory_order_relaxed);
  }
  return restricted_forward(x, weights, active, mode);
}

}  // namespace

double RetrievalStats::miss_rate() const {
  const auto q = queries.load();
  return q == 0 ? 0.0 : static_cast<double>(misses.load()) / static_cast<double>(q);
}

void RetrievalStats::reset() {
  queries = 0;
  misses = 0;
  active_total = 0;
}

Real sigmoid(Real z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const Real e = std::exp(z);
  return e / (1.0 + e);
}

Real log_sigmoid(Real z) {
  // log(sigmoid(z)) = -softplus(-z)
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

std::vector<Real> exact_softmax_forward(std::span<const Real> x, const ParamMatrix& weights) {
  check_dim(x, weights, "exact_softmax_forward");
  std::vector<Real> probs(weights.rows());
  for (std::size_t j = 0; j < weights.rows(); ++j) probs[j] = dot(x, weights.row(j));
  softmax_inplace(probs);
  return probs;
}

std::vector<Real> exact_logits_batch(std::span<const Real> xs, std::size_t batch, const ParamMatrix& weights,
                                     unsigned threads) {
  const std::size_t n = weights.rows();
  const std::size_t d = weights.dim();
  if (xs.size() != batch * d) throw DimensionError("exact_logits_batch: input is not batch x dim");
  using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ColMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
  // logits^T (n x batch, column-major) == logits (batch x n, row-major)
  std::vector<Real> out(batch * n);
  Eigen::Map<const ColMat> xt(xs.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(batch));
  Eigen::Map<ColMat> lt(out.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(batch));

  auto run_rows = [&](std::size_t begin, std::size_t end) {
    if (begin >= end) return;
    Eigen::Map<const RowMat> w(weights.weights().data() + begin * d, static_cast<Eigen::Index>(end - begin),
                               static_cast<Eigen::Index>(d));
    lt.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)).noalias() = w * xt;
  };

  threads = std::max(1u, threads);
  if (threads == 1 || n < 2 * threads) {
    run_rows(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back(run_rows, t * chunk, std::min(n, (t + 1) * chunk));
  }
  for (auto& th : pool) th.join();
  return out;
}

std::vector<Real> dense_weight_gradient(std::span<const Real> errors, std::span<const Real> xs, std::size_t batch,
                                        std::size_t rows, std::size_t dim) {
  if (errors.size() != batch * rows || xs.size() != batch * dim) {
    throw DimensionError("dense_weight_gradient: shape mismatch");
  }
  using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<Real> out(rows * dim);
  Eigen::Map<const RowMat> e(errors.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(rows));
  Eigen::Map<const RowMat> x(xs.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(dim));
  Eigen::Map<RowMat> g(out.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  g.noalias() = e.transpose() * x;
  return out;
}

void softmax_rows_inplace(std::span<Real> logits, std::size_t batch) {
  if (batch == 0) return;
  const std::size_t n = logits.size() / batch;
  for (std::size_t b = 0; b < batch; ++b) softmax_inplace(logits.subspan(b * n, n));
}

SparseActivation restricted_forward(std::span<const Real> x, const ParamMatrix& weights,
                                    std::span<const ClassId> active, OutputMode mode) {
  check_dim(x, weights, "restricted_forward");
  SparseActivation act;
  act.mode = mode;
  act.ids.assign(active.begin(), active.end());
  act.logits.resize(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] >= weights.rows()) throw UsageError("restricted_forward: class id out of range");
    act.logits[i] = dot(x, weights.row(active[i]));
    if (mode == OutputMode::kLogistic) act.logits[i] += weights.bias(active[i]);
  }
  act.probs = act.logits;
  if (mode == OutputMode::kSoftmax) {
    softmax_inplace(act.probs);
  } else {
    for (Real& p : act.probs) {
      if (!std::isfinite(p)) throw NumericError("logistic: non-finite logit");
      p = sigmoid(p);
    }
  }
  return act;
}

SparseActivation sparse_softmax_forward(std::span<const Real> x, const ParamMatrix& weights, const LshIndex& index,
                                        std::size_t top_k, std::span<const ClassId> positives, RetrievalStats* stats,
                                        QueryScratch* scratch) {
  return sparse_forward(x, weights, index, top_k, positives, stats, scratch, OutputMode::kSoftmax);
}

SparseActivation sparse_logistic_forward(std::span<const Real> x, const ParamMatrix& weights, const LshIndex& index,
                                         std::size_t top_k, std::span<const ClassId> positives, RetrievalStats* stats,
                                         QueryScratch* scratch) {
  return sparse_forward(x, weights, index, top_k, positives, stats, scratch, OutputMode::kLogistic);
}

Targets make_targets(std::span<const ClassId> labels, OutputMode mode) {
  Targets t;
  if (labels.empty()) return t;
  const Real w = mode == OutputMode::kSoftmax ? 1.0 / static_cast<Real>(labels.size()) : 1.0;
  for (ClassId c : labels) t.emplace_back(c, w);
  return t;
}

SparseGradient sparse_backward(const SparseActivation& act, std::span<const Real> x, const Targets& targets,
                               const ParamMatrix& weights) {
  check_dim(x, weights, "sparse_backward");
  const std::size_t d = weights.dim();
  const std::size_t n_active = act.ids.size();

  std::vector<Real> t(n_active, 0.0);
  Real target_mass = 0.0;
  for (const auto& [id, weight] : targets) {
    auto it = std::find(act.ids.begin(), act.ids.end(), id);
    if (it == act.ids.end()) {
      throw UsageError("sparse_backward: target class " + std::to_string(id) + " is not in the active set");
    }
    t[static_cast<std::size_t>(it - act.ids.begin())] += weight;
    target_mass += weight;
  }
  if (act.mode == OutputMode::kSoftmax && n_active > 0 && std::abs(target_mass - 1.0) > 1e-9) {
    throw UsageError("sparse_backward: softmax targets must sum to 1");
  }

  SparseGradient g;
  g.ids = act.ids;
  g.rows.assign(n_active * d, 0.0);
  g.input.assign(d, 0.0);
  if (act.mode == OutputMode::kLogistic) g.bias.assign(n_active, 0.0);

  if (act.mode == OutputMode::kSoftmax && n_active > 0) {
    Real max_logit = *std::max_element(act.logits.begin(), act.logits.end());
    Real sum = 0.0;
    for (Real z : act.logits) sum += std::exp(z - max_logit);
    const Real log_norm = max_logit + std::log(sum);
    for (std::size_t i = 0; i < n_active; ++i) {
      if (t[i] != 0.0) g.loss -= t[i] * (act.logits[i] - log_norm);
    }
  }

  for (std::size_t i = 0; i < n_active; ++i) {
    if (act.mode == OutputMode::kLogistic) {
      const Real z = act.logits[i];
      // softplus(z) - t z
      g.loss += -log_sigmoid(-z) * (1.0 - t[i]) - log_sigmoid(z) * t[i];
    }
    const Real err = act.probs[i] - t[i];
    if (err == 0.0) continue;
    Real* grow = g.rows.data() + i * d;
    const auto w = weights.row(act.ids[i]);
    for (std::size_t k = 0; k < d; ++k) {
      grow[k] = err * x[k];
      g.input[k] += err * w[k];
    }
    if (!g.bias.empty()) g.bias[i] = err;
  }
  return g;
}

}  // namespace wta
