#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wta/param_matrix.hpp"
#include "wta/types.hpp"

namespace wta {

/// One decision on a root-to-leaf path: internal node and branch taken
/// (right = true means probability sigmoid(x . v_node)).
struct PathStep {
  std::uint32_t node = 0;
  bool right = false;
};

/// Balanced binary tree over N classes. The shape is a complete binary tree
/// in heap order (2N-1 nodes, internal nodes 0..N-2); classes are assigned to
/// leaves left to right in id order.
class HsTree {
 public:
  HsTree() = default;

  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_internal() const { return nodes_.rows(); }
  std::size_t dim() const { return nodes_.dim(); }
  std::size_t max_depth() const;

  std::span<const PathStep> path(ClassId c) const {
    return {steps_.data() + offsets_[c], offsets_[c + 1] - offsets_[c]};
  }

  /// Child of an internal node: >= 0 is an internal node id, < 0 encodes leaf
  /// class -(child + 1).
  std::int64_t child(std::uint32_t node, bool right) const { return children_[2 * node + (right ? 1 : 0)]; }

  const ParamMatrix& nodes() const { return nodes_; }
  ParamMatrix& nodes() { return nodes_; }

  friend HsTree hs_build_tree(std::size_t num_classes, std::size_t dim, std::uint64_t seed);

 private:
  std::size_t num_classes_ = 0;
  ParamMatrix nodes_;
  std::vector<std::int64_t> children_;
  std::vector<std::size_t> offsets_;
  std::vector<PathStep> steps_;
};

/// Throws ConfigError if num_classes < 2. Node vectors are Gaussian with
/// standard deviation 1/sqrt(dim) drawn from `seed`.
HsTree hs_build_tree(std::size_t num_classes, std::size_t dim, std::uint64_t seed);

/// log P(label | x) as a sum of log-sigmoids along the label's path.
Real hs_log_prob(std::span<const Real> x, const HsTree& tree, ClassId label);
Real hs_forward(std::span<const Real> x, const HsTree& tree, ClassId label);

/// log P(c | x) for every class in one top-down pass (N-1 dot products).
std::vector<Real> hs_all_log_probs(std::span<const Real> x, const HsTree& tree);

/// Follows the more probable branch at every node.
ClassId hs_predict_greedy(std::span<const Real> x, const HsTree& tree);

struct HsGradient {
  Real loss = 0.0;  // -log P(label | x)
  std::vector<std::uint32_t> nodes;
  std::vector<Real> rows;   // nodes.size() x dim
  std::vector<Real> input;  // dL/dx
};

HsGradient hs_loss_backward(std::span<const Real> x, const HsTree& tree, ClassId label);

}  // namespace wta
