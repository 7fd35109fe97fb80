#include "wta/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wta/error.hpp"
#include "wta/hsoftmax.hpp"

namespace wta {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: learning rate must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("train: decay must be in (0, 1]");
  if (decay_interval < 1) throw ConfigError("train: decay interval must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (top_k < 1) throw ConfigError("train: K must be >= 1");
}

std::uint32_t TrainConfig::resolved_rehash_batch(std::size_t num_classes) const {
  if (rehash_batch) return *rehash_batch;
  return static_cast<std::uint32_t>((num_classes + 999) / 1000);
}

double lr_schedule(std::uint64_t step, const TrainConfig& config) {
  return config.learning_rate * std::pow(config.decay, static_cast<double>(step / config.decay_interval));
}

RehashCursor::RehashCursor(std::size_t num_classes, std::uint64_t next)
    : num_classes_(std::max<std::size_t>(num_classes, 1)), next_(next % std::max<std::size_t>(num_classes, 1)) {}

std::vector<ClassId> RehashCursor::take(std::uint32_t count) {
  std::vector<ClassId> ids;
  ids.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    ids.push_back(static_cast<ClassId>(next_));
    next_ = (next_ + 1) % num_classes_;
  }
  return ids;
}

LazyRows::LazyRows(std::size_t rows, std::size_t dim) : dim_(dim), slot_(rows, -1), touched_mark_(rows, 0) {}

std::span<Real> LazyRows::get(std::size_t row) {
  auto& slot = slot_[row];
  if (slot < 0) {
    slot = static_cast<std::int64_t>(rows_.size());
    rows_.emplace_back(dim_, 0.0);
  }
  auto& storage = rows_[static_cast<std::size_t>(slot)];
  if (!touched_mark_[row]) {
    touched_mark_[row] = 1;
    touched_.push_back(static_cast<ClassId>(row));
  }
  return storage;
}

void LazyRows::clear() {
  for (ClassId row : touched_) {
    touched_mark_[row] = 0;
    auto& storage = rows_[static_cast<std::size_t>(slot_[row])];
    std::fill(storage.begin(), storage.end(), 0.0);
  }
  touched_.clear();
}

void LazyRows::clear_touched_only() {
  for (ClassId row : touched_) touched_mark_[row] = 0;
  touched_.clear();
}

Trainer::Trainer(Model model, TrainConfig config)
    : model_(std::move(model)),
      config_(config),
      rehash_batch_(config.resolved_rehash_batch(model_.num_classes)),
      cursor_(model_.num_classes),
      shuffle_rng_(derive_seed(config.seed, 3)) {
  config_.validate();
  std::size_t rows = model_.num_classes;
  if (model_.kind == LayerKind::kHierarchical) rows = model_.tree->num_internal();
  velocity_ = LazyRows(rows, model_.dim);
  grads_ = LazyRows(rows, model_.dim);
  bias_velocity_ = LazyRows(rows, 1);
  bias_grads_ = LazyRows(rows, 1);
}

void Trainer::set_progress(std::uint64_t step, std::uint64_t cursor) {
  step_ = step;
  cursor_ = RehashCursor(model_.num_classes, cursor);
}

std::vector<std::size_t> Trainer::next_batch(std::size_t num_examples) {
  if (num_examples == 0) throw UsageError("next_batch: empty dataset");
  if (order_.size() != num_examples) {
    order_.resize(num_examples);
    for (std::size_t i = 0; i < num_examples; ++i) order_[i] = i;
    order_pos_ = num_examples;
  }
  std::vector<std::size_t> batch;
  batch.reserve(config_.batch_size);
  while (batch.size() < config_.batch_size) {
    if (order_pos_ == order_.size()) {
      for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[shuffle_rng_.bounded(i)]);
      order_pos_ = 0;
    }
    batch.push_back(order_[order_pos_++]);
  }
  return batch;
}

StepMetrics Trainer::step(const Dataset& data, std::span<const std::size_t> rows) {
  if (data.dim() != model_.dim) throw DimensionError("train_step: dataset dim does not match model");
  if (data.num_classes() > model_.num_classes) throw UsageError("train_step: dataset has more classes than model");
  if (rows.empty()) throw UsageError("train_step: empty batch");
  for (std::size_t r : rows) {
    if (r >= data.size()) throw UsageError("train_step: example index out of range");
  }
  const double lr = lr_schedule(step_, config_);
  StepMetrics m;
  switch (model_.kind) {
    case LayerKind::kWta: m = step_wta(data, rows, lr); break;
    case LayerKind::kExact: m = step_exact(data, rows, lr); break;
    case LayerKind::kHierarchical: m = step_hs(data, rows, lr); break;
  }
  m.step = step_++;
  m.lr = lr;
  m.miss_rate = static_cast<double>(m.misses) / static_cast<double>(rows.size());
  return m;
}

void Trainer::apply_momentum(ParamMatrix& params, LazyRows& velocity, LazyRows& grads, LazyRows* bias_grads,
                             LazyRows* bias_velocity, double lr) {
  std::vector<ClassId> touched = grads.touched();
  std::sort(touched.begin(), touched.end());
  const double mu = config_.momentum;
  for (ClassId id : touched) {
    auto g = grads.get(id);
    auto v = velocity.get(id);
    auto w = params.row(id);
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = mu * v[k] - lr * g[k];
      w[k] += v[k];
      if (!std::isfinite(w[k])) {
        throw NumericError("train_step: non-finite parameter in row " + std::to_string(id) + " at step " +
                           std::to_string(step_));
      }
    }
    if (bias_grads != nullptr && params.has_bias()) {
      auto bg = bias_grads->get(id);
      auto bv = bias_velocity->get(id);
      bv[0] = mu * bv[0] - lr * bg[0];
      params.bias_ref(id) += bv[0];
      if (!std::isfinite(params.bias(id))) throw NumericError("train_step: non-finite bias");
    }
  }
  grads.clear();
  if (bias_grads != nullptr) bias_grads->clear();
  // Velocity rows only accumulate; their touched lists are not needed.
  velocity.clear_touched_only();
  if (bias_velocity != nullptr) bias_velocity->clear_touched_only();
}

StepMetrics Trainer::step_wta(const Dataset& data, std::span<const std::size_t> rows, double lr) {
  const std::size_t d = model_.dim;
  const OutputMode mode = model_.mode;
  const double scale = 1.0 / static_cast<double>(rows.size());
  std::vector<Real> x(d);
  StepMetrics m;
  double loss_sum = 0.0;
  std::size_t contributing = 0;
  std::size_t active_total = 0;
  for (std::size_t r : rows) {
    data.features_f64(r, x);
    const auto labels = data.labels(r);
    const SparseActivation act =
        mode == OutputMode::kSoftmax
            ? sparse_softmax_forward(x, model_.weights, *model_.index, config_.top_k, labels, nullptr, &scratch_)
            : sparse_logistic_forward(x, model_.weights, *model_.index, config_.top_k, labels, nullptr, &scratch_);
    active_total += act.size();
    if (act.empty()) {
      ++m.misses;
      continue;
    }
    if (mode == OutputMode::kSoftmax && labels.empty()) continue;
    const SparseGradient g = sparse_backward(act, x, make_targets(labels, mode), model_.weights);
    loss_sum += g.loss;
    ++contributing;
    for (std::size_t i = 0; i < g.ids.size(); ++i) {
      auto acc = grads_.get(g.ids[i]);
      const auto gr = g.row(i, d);
      for (std::size_t k = 0; k < d; ++k) acc[k] += scale * gr[k];
      if (!g.bias.empty()) bias_grads_.get(g.ids[i])[0] += scale * g.bias[i];
    }
  }
  std::vector<ClassId> touched = grads_.touched();
  std::sort(touched.begin(), touched.end());
  m.rows_updated = touched.size();
  const bool logistic = mode == OutputMode::kLogistic;
  apply_momentum(model_.weights, velocity_, grads_, logistic ? &bias_grads_ : nullptr,
                 logistic ? &bias_velocity_ : nullptr, lr);

  if (config_.refresh_touched) {
    for (ClassId id : touched) model_.index->update(id, model_.weights.row(id));
  }
  for (ClassId id : cursor_.take(rehash_batch_)) model_.index->update(id, model_.weights.row(id));

  m.loss = contributing == 0 ? 0.0 : loss_sum / static_cast<double>(contributing);
  m.mean_active = static_cast<double>(active_total) / static_cast<double>(rows.size());
  return m;
}

StepMetrics Trainer::step_exact(const Dataset& data, std::span<const std::size_t> rows, double lr) {
  const std::size_t d = model_.dim;
  const std::size_t n = model_.num_classes;
  const std::size_t batch = rows.size();
  const OutputMode mode = model_.mode;
  const double scale = 1.0 / static_cast<double>(batch);
  std::vector<Real> xs(batch * d);
  for (std::size_t b = 0; b < batch; ++b) data.features_f64(rows[b], std::span<Real>(xs.data() + b * d, d));
  std::vector<Real> errors = exact_logits_batch(xs, batch, model_.weights);

  StepMetrics m;
  double loss_sum = 0.0;
  std::size_t contributing = 0;
  std::vector<Real> t(n);
  for (std::size_t b = 0; b < batch; ++b) {
    std::span<Real> z(errors.data() + b * n, n);
    const auto labels = data.labels(rows[b]);
    std::fill(t.begin(), t.end(), 0.0);
    for (const auto& [id, w] : make_targets(labels, mode)) t[id] += w;
    if (mode == OutputMode::kSoftmax) {
      if (labels.empty()) {
        std::fill(z.begin(), z.end(), 0.0);
        continue;
      }
      Real max_logit = z[0];
      for (Real v : z) {
        if (!std::isfinite(v)) throw NumericError("train_step: non-finite logit");
        max_logit = std::max(max_logit, v);
      }
      Real sum = 0.0;
      for (Real v : z) sum += std::exp(v - max_logit);
      const Real lse = max_logit + std::log(sum);
      for (std::size_t j = 0; j < n; ++j) {
        if (t[j] != 0.0) loss_sum -= t[j] * (z[j] - lse);
        z[j] = (std::exp(z[j] - lse) - t[j]) * scale;
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const Real logit = z[j] + model_.weights.bias(j);
        if (!std::isfinite(logit)) throw NumericError("train_step: non-finite logit");
        loss_sum -= t[j] * log_sigmoid(logit) + (1.0 - t[j]) * log_sigmoid(-logit);
        z[j] = (sigmoid(logit) - t[j]) * scale;
      }
    }
    ++contributing;
  }
  const std::vector<Real> g = dense_weight_gradient(errors, xs, batch, n, d);
  for (std::size_t j = 0; j < n; ++j) {
    auto acc = grads_.get(j);
    std::copy(g.begin() + static_cast<std::ptrdiff_t>(j * d), g.begin() + static_cast<std::ptrdiff_t>((j + 1) * d),
              acc.begin());
    if (mode == OutputMode::kLogistic) {
      Real s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) s += errors[b * n + j];
      bias_grads_.get(j)[0] = s;
    }
  }
  m.rows_updated = n;
  const bool logistic = mode == OutputMode::kLogistic;
  apply_momentum(model_.weights, velocity_, grads_, logistic ? &bias_grads_ : nullptr,
                 logistic ? &bias_velocity_ : nullptr, lr);
  m.loss = contributing == 0 ? 0.0 : loss_sum / static_cast<double>(contributing);
  m.mean_active = static_cast<double>(n);
  return m;
}

StepMetrics Trainer::step_hs(const Dataset& data, std::span<const std::size_t> rows, double lr) {
  const std::size_t d = model_.dim;
  const double scale = 1.0 / static_cast<double>(rows.size());
  std::vector<Real> x(d);
  StepMetrics m;
  double loss_sum = 0.0;
  std::size_t contributing = 0;
  std::size_t path_total = 0;
  for (std::size_t r : rows) {
    const auto labels = data.labels(r);
    if (labels.empty()) continue;
    data.features_f64(r, x);
    const double w = 1.0 / static_cast<double>(labels.size());
    for (ClassId label : labels) {
      const HsGradient g = hs_loss_backward(x, *model_.tree, label);
      loss_sum += w * g.loss;
      path_total += g.nodes.size();
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        auto acc = grads_.get(g.nodes[i]);
        for (std::size_t k = 0; k < d; ++k) acc[k] += scale * w * g.rows[i * d + k];
      }
    }
    ++contributing;
  }
  m.rows_updated = grads_.touched().size();
  apply_momentum(model_.tree->nodes(), velocity_, grads_, nullptr, nullptr, lr);
  m.loss = contributing == 0 ? 0.0 : loss_sum / static_cast<double>(contributing);
  m.mean_active = static_cast<double>(path_total) / static_cast<double>(rows.size());
  return m;
}

}  // namespace wta
