#include "wta/model.hpp"

#include <algorithm>
#include <numeric>

#include "wta/error.hpp"
#include "wta/metrics.hpp"
#include "wta/rng.hpp"

namespace wta {

Model make_model(LayerKind kind, OutputMode mode, std::size_t num_classes, std::size_t dim, std::uint64_t seed,
                 const WtaParams* wta_params) {
  if (num_classes < 1 || dim < 1) throw ConfigError("make_model: need at least one class and dim >= 1");
  Model m;
  m.kind = kind;
  m.mode = mode;
  m.num_classes = num_classes;
  m.dim = dim;
  const std::uint64_t init_seed = derive_seed(seed, 10);
  switch (kind) {
    case LayerKind::kHierarchical:
      m.mode = OutputMode::kSoftmax;
      m.tree = hs_build_tree(num_classes, dim, init_seed);
      break;
    case LayerKind::kWta: {
      if (wta_params == nullptr) throw ConfigError("make_model: WTA layer needs hash parameters");
      if (wta_params->dim != dim) throw ConfigError("make_model: hash parameters have the wrong dim");
      m.weights = ParamMatrix::gaussian(num_classes, dim, init_seed, mode == OutputMode::kLogistic);
      m.index = LshIndex::build(m.weights, *wta_params);
      break;
    }
    case LayerKind::kExact:
      m.weights = ParamMatrix::gaussian(num_classes, dim, init_seed, mode == OutputMode::kLogistic);
      break;
  }
  return m;
}

namespace {

std::vector<ClassId> rank_dense(std::span<const Real> scores, std::size_t depth) {
  std::vector<ClassId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), ClassId{0});
  depth = std::min(depth, ids.size());
  auto better = [&](ClassId a, ClassId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(depth), ids.end(), better);
  ids.resize(depth);
  return ids;
}

std::vector<ClassId> rank_sparse(const SparseActivation& act, std::size_t depth) {
  std::vector<std::size_t> order(act.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return act.probs[a] != act.probs[b] ? act.probs[a] > act.probs[b] : act.ids[a] < act.ids[b];
  });
  std::vector<ClassId> out;
  for (std::size_t i = 0; i < std::min(depth, order.size()); ++i) out.push_back(act.ids[order[i]]);
  return out;
}

}  // namespace

std::vector<std::vector<ClassId>> predict_rankings(const Model& model, const Dataset& data,
                                                   const PredictOptions& options, RetrievalStats* stats) {
  if (data.dim() != model.dim) throw DimensionError("predict: dataset dim does not match model");
  std::vector<std::vector<ClassId>> out(data.size());
  std::vector<Real> x(model.dim);
  QueryScratch scratch;

  if (model.kind == LayerKind::kHierarchical) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      data.features_f64(i, x);
      out[i] = rank_dense(hs_all_log_probs(x, *model.tree), options.depth);
    }
    return out;
  }

  if (model.kind == LayerKind::kWta && !options.force_exact) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      data.features_f64(i, x);
      const SparseActivation act =
          model.mode == OutputMode::kSoftmax
              ? sparse_softmax_forward(x, model.weights, *model.index, options.top_k, {}, stats, &scratch)
              : sparse_logistic_forward(x, model.weights, *model.index, options.top_k, {}, stats, &scratch);
      out[i] = rank_sparse(act, options.depth);
    }
    return out;
  }

  // Exact scoring in blocks of examples; ranking by logit equals ranking by
  // probability in both output modes.
  constexpr std::size_t kBlock = 64;
  std::vector<Real> xs;
  for (std::size_t begin = 0; begin < data.size(); begin += kBlock) {
    const std::size_t end = std::min(data.size(), begin + kBlock);
    xs.resize((end - begin) * model.dim);
    for (std::size_t i = begin; i < end; ++i) {
      data.features_f64(i, std::span<Real>(xs.data() + (i - begin) * model.dim, model.dim));
    }
    std::vector<Real> logits = exact_logits_batch(xs, end - begin, model.weights);
    const std::size_t n = model.num_classes;
    for (std::size_t i = begin; i < end; ++i) {
      std::span<Real> row(logits.data() + (i - begin) * n, n);
      if (model.mode == OutputMode::kLogistic) {
        for (std::size_t j = 0; j < n; ++j) row[j] += model.weights.bias(j);
      }
      out[i] = rank_dense(row, options.depth);
    }
  }
  return out;
}

std::vector<ClassId> top1(const std::vector<std::vector<ClassId>>& rankings) {
  std::vector<ClassId> out;
  out.reserve(rankings.size());
  for (const auto& r : rankings) out.push_back(r.empty() ? kNoPrediction : r.front());
  return out;
}

std::vector<std::vector<ClassId>> truth_sets(const Dataset& data) {
  std::vector<std::vector<ClassId>> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto labels = data.labels(i);
    out[i].assign(labels.begin(), labels.end());
  }
  return out;
}

}  // namespace wta
