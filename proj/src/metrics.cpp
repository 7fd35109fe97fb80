#include "wta/metrics.hpp"

#include <algorithm>
#include <string>

#include "wta/error.hpp"

namespace wta {

PrecisionResult precision_at_k(std::span<const std::vector<ClassId>> rankings,
                               std::span<const std::vector<ClassId>> truths, std::size_t k) {
  if (k < 1) throw UsageError("precision_at_k: k must be >= 1");
  if (rankings.size() != truths.size()) throw DimensionError("precision_at_k: rankings and truths differ in length");
  PrecisionResult result;
  double total = 0.0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& truth = truths[i];
    if (truth.empty()) {
      ++result.skipped;
      continue;
    }
    const std::size_t depth = std::min(k, rankings[i].size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < depth; ++r) {
      if (std::find(truth.begin(), truth.end(), rankings[i][r]) != truth.end()) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(std::min(k, truth.size()));
    ++result.evaluated;
  }
  result.value = result.evaluated == 0 ? 0.0 : total / static_cast<double>(result.evaluated);
  return result;
}

double top1_accuracy(std::span<const ClassId> predictions, const Dataset& data) {
  if (predictions.size() != data.size()) throw DimensionError("top1_accuracy: one prediction per example expected");
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto labels = data.labels(i);
    if (predictions[i] != kNoPrediction && std::find(labels.begin(), labels.end(), predictions[i]) != labels.end()) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  Histogram h;
  if (bins == 0) throw UsageError("make_histogram: need at least one bin");
  h.counts.assign(bins, 0);
  if (values.empty()) {
    h.edges.assign(bins + 1, 0.0);
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(lo + width * static_cast<double>(b));
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

ClassVariance in_class_variance(const Dataset& data, std::span<const double> features, std::size_t dim,
                                std::size_t bins) {
  if (features.size() != data.size() * dim) throw DimensionError("in_class_variance: features are not size x dim");
  const std::size_t n_classes = data.num_classes();
  // Welford updates per class and dimension.
  std::vector<std::size_t> count(n_classes, 0);
  std::vector<double> mean(n_classes * dim, 0.0);
  std::vector<double> m2(n_classes * dim, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* x = features.data() + i * dim;
    for (ClassId c : data.labels(i)) {
      const double n = static_cast<double>(++count[c]);
      double* mu = mean.data() + c * dim;
      double* acc = m2.data() + c * dim;
      for (std::size_t k = 0; k < dim; ++k) {
        const double delta = x[k] - mu[k];
        mu[k] += delta / n;
        acc[k] += delta * (x[k] - mu[k]);
      }
    }
  }
  ClassVariance out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (count[c] < 2) {
      ++out.skipped;
      continue;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < dim; ++k) total += m2[c * dim + k];
    out.classes.push_back(static_cast<ClassId>(c));
    out.variance.push_back(total / static_cast<double>(count[c]));
  }
  out.histogram = make_histogram(out.variance, bins);
  return out;
}

ClassVariance in_class_variance(const Dataset& data, std::size_t bins) {
  std::vector<double> features(data.size() * data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data.features_f64(i, std::span<double>(features.data() + i * data.dim(), data.dim()));
  }
  return in_class_variance(data, features, data.dim(), bins);
}

}  // namespace wta
