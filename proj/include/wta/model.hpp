#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wta/dataset.hpp"
#include "wta/hsoftmax.hpp"
#include "wta/layers.hpp"
#include "wta/lsh_index.hpp"
#include "wta/param_matrix.hpp"
#include "wta/types.hpp"

namespace wta {

/// An output layer of one of the three kinds. `weights` backs the WTA and
/// exact layers, `tree` the hierarchical one; `index` exists for WTA only.
struct Model {
  LayerKind kind = LayerKind::kWta;
  OutputMode mode = OutputMode::kSoftmax;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  ParamMatrix weights;
  std::optional<LshIndex> index;
  std::optional<HsTree> tree;
};

/// Gaussian-initialised model (std 1/sqrt(dim)); the WTA index is built from
/// the initial weights.
Model make_model(LayerKind kind, OutputMode mode, std::size_t num_classes, std::size_t dim, std::uint64_t seed,
                 const WtaParams* wta_params = nullptr);

struct PredictOptions {
  /// Use the exact dense layer even when the model has an index.
  bool force_exact = false;
  std::size_t top_k = 100;  // retrieved classes for the WTA path
  std::size_t depth = 1;    // length of each returned ranking
};

/// Class rankings (most probable first, ties by ascending id) for every
/// example. A WTA retrieval miss yields an empty ranking and is counted in
/// `stats`.
std::vector<std::vector<ClassId>> predict_rankings(const Model& model, const Dataset& data,
                                                   const PredictOptions& options, RetrievalStats* stats = nullptr);

/// First entry of each ranking, kNoPrediction for empty ones.
std::vector<ClassId> top1(const std::vector<std::vector<ClassId>>& rankings);

/// Truth label sets as vectors.
std::vector<std::vector<ClassId>> truth_sets(const Dataset& data);

}  // namespace wta
