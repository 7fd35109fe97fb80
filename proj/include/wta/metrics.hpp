#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "wta/dataset.hpp"
#include "wta/types.hpp"

namespace wta {

inline constexpr ClassId kNoPrediction = std::numeric_limits<ClassId>::max();

struct PrecisionResult {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // examples with an empty truth set
};

/// Mean over examples of |top-k of ranking  intersect  truth| / min(k, |truth|).
PrecisionResult precision_at_k(std::span<const std::vector<ClassId>> rankings,
                               std::span<const std::vector<ClassId>> truths, std::size_t k);

/// Fraction of examples whose prediction is one of their labels; kNoPrediction
/// counts as wrong.
double top1_accuracy(std::span<const ClassId> predictions, const Dataset& data);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

Histogram make_histogram(std::span<const double> values, std::size_t bins);

struct ClassVariance {
  std::vector<ClassId> classes;  // classes with >= 2 examples
  std::vector<double> variance;  // mean squared distance to the class centroid
  std::size_t skipped = 0;       // classes with fewer than 2 examples
  Histogram histogram;
};

/// `features` holds one row of length `dim` per example of `data`; an example
/// contributes to every class in its label set.
ClassVariance in_class_variance(const Dataset& data, std::span<const double> features, std::size_t dim,
                                std::size_t bins = 20);
ClassVariance in_class_variance(const Dataset& data, std::size_t bins = 20);

}  // namespace wta
