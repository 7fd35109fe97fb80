#include "wta/hsoftmax.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wta/error.hpp"
#include "wta/layers.hpp"

namespace wta {

namespace {

void check_input(std::span<const Real> x, const HsTree& tree, const char* op) {
  if (x.size() != tree.dim()) throw DimensionError(std::string(op) + ": input dimension does not match tree");
}

void check_label(ClassId label, const HsTree& tree, const char* op) {
  if (label >= tree.num_classes()) throw UsageError(std::string(op) + ": label out of range");
}

Real checked_dot(std::span<const Real> x, std::span<const Real> v) {
  const Real z = dot(x, v);
  if (!std::isfinite(z)) throw NumericError("hierarchical softmax: non-finite node logit");
  return z;
}

}  // namespace

HsTree hs_build_tree(std::size_t num_classes, std::size_t dim, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("hs_build_tree: need at least 2 classes");
  if (dim < 1) throw ConfigError("hs_build_tree: dim must be >= 1");
  HsTree tree;
  tree.num_classes_ = num_classes;
  const std::size_t internal = num_classes - 1;
  const std::size_t total = 2 * num_classes - 1;
  tree.nodes_ = ParamMatrix::gaussian(internal, dim, seed);

  // Leaves are heap slots internal..total-1; number them left to right.
  std::vector<std::int64_t> leaf_class(total, -1);
  ClassId next = 0;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (i >= internal) {
      leaf_class[i] = next++;
      continue;
    }
    stack.push_back(2 * i + 2);
    stack.push_back(2 * i + 1);
  }

  tree.children_.resize(2 * internal);
  for (std::size_t i = 0; i < internal; ++i) {
    for (int side = 0; side < 2; ++side) {
      const std::size_t c = 2 * i + 1 + static_cast<std::size_t>(side);
      tree.children_[2 * i + static_cast<std::size_t>(side)] =
          c < internal ? static_cast<std::int64_t>(c) : -(leaf_class[c] + 1);
    }
  }

  std::vector<std::size_t> slot_of_class(num_classes);
  for (std::size_t i = internal; i < total; ++i) slot_of_class[static_cast<std::size_t>(leaf_class[i])] = i;
  tree.offsets_.assign(num_classes + 1, 0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<PathStep> path;
    for (std::size_t i = slot_of_class[c]; i != 0; i = (i - 1) / 2) {
      path.push_back({static_cast<std::uint32_t>((i - 1) / 2), i % 2 == 0});
    }
    std::reverse(path.begin(), path.end());
    tree.steps_.insert(tree.steps_.end(), path.begin(), path.end());
    tree.offsets_[c + 1] = tree.steps_.size();
  }
  return tree;
}

std::size_t HsTree::max_depth() const {
  std::size_t depth = 0;
  for (std::size_t c = 0; c < num_classes_; ++c) depth = std::max(depth, offsets_[c + 1] - offsets_[c]);
  return depth;
}

Real hs_log_prob(std::span<const Real> x, const HsTree& tree, ClassId label) {
  check_input(x, tree, "hs_forward");
  check_label(label, tree, "hs_forward");
  Real logp = 0.0;
  for (const PathStep& s : tree.path(label)) {
    const Real z = checked_dot(x, tree.nodes().row(s.node));
    logp += log_sigmoid(s.right ? z : -z);
  }
  return logp;
}

Real hs_forward(std::span<const Real> x, const HsTree& tree, ClassId label) {
  return std::exp(hs_log_prob(x, tree, label));
}

std::vector<Real> hs_all_log_probs(std::span<const Real> x, const HsTree& tree) {
  check_input(x, tree, "hs_all_log_probs");
  const std::size_t internal = tree.num_internal();
  std::vector<Real> node_logp(internal, 0.0);
  std::vector<Real> out(tree.num_classes(), 0.0);
  // Heap order: every parent precedes its children.
  for (std::size_t i = 0; i < internal; ++i) {
    const Real z = checked_dot(x, tree.nodes().row(i));
    for (int side = 0; side < 2; ++side) {
      const bool right = side == 1;
      const Real lp = node_logp[i] + log_sigmoid(right ? z : -z);
      const std::int64_t c = tree.child(static_cast<std::uint32_t>(i), right);
      if (c >= 0) {
        node_logp[static_cast<std::size_t>(c)] = lp;
      } else {
        out[static_cast<std::size_t>(-c - 1)] = lp;
      }
    }
  }
  return out;
}

ClassId hs_predict_greedy(std::span<const Real> x, const HsTree& tree) {
  check_input(x, tree, "hs_predict_greedy");
  std::int64_t node = 0;
  for (;;) {
    const Real z = checked_dot(x, tree.nodes().row(static_cast<std::size_t>(node)));
    const std::int64_t c = tree.child(static_cast<std::uint32_t>(node), z > 0);
    if (c < 0) return static_cast<ClassId>(-c - 1);
    node = c;
  }
}

HsGradient hs_loss_backward(std::span<const Real> x, const HsTree& tree, ClassId label) {
  check_input(x, tree, "hs_loss_backward");
  check_label(label, tree, "hs_loss_backward");
  const std::size_t d = tree.dim();
  const auto path = tree.path(label);
  HsGradient g;
  g.nodes.reserve(path.size());
  g.rows.assign(path.size() * d, 0.0);
  g.input.assign(d, 0.0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto v = tree.nodes().row(path[i].node);
    const Real z = checked_dot(x, v);
    const Real sign = path[i].right ? 1.0 : -1.0;
    g.loss -= log_sigmoid(sign * z);
    // d/dz [-log sigmoid(s z)] = -s * sigmoid(-s z)
    const Real dz = -sign * sigmoid(-sign * z);
    g.nodes.push_back(path[i].node);
    Real* row = g.rows.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) {
      row[k] = dz * x[k];
      g.input[k] += dz * v[k];
    }
  }
  return g;
}

}  // namespace wta
