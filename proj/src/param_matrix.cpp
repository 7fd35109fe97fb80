#include "wta/param_matrix.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "wta/error.hpp"
#include "wta/rng.hpp"

namespace wta {

const char* to_string(OutputMode mode) { return mode == OutputMode::kSoftmax ? "softmax" : "logistic"; }

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kWta: return "wta";
    case LayerKind::kExact: return "exact";
    case LayerKind::kHierarchical: return "hs";
  }
  return "?";
}

OutputMode parse_output_mode(const char* name) {
  if (std::strcmp(name, "softmax") == 0) return OutputMode::kSoftmax;
  if (std::strcmp(name, "logistic") == 0) return OutputMode::kLogistic;
  throw ConfigError(std::string("unknown output mode '") + name + "' (expected softmax|logistic)");
}

LayerKind parse_layer_kind(const char* name) {
  if (std::strcmp(name, "wta") == 0) return LayerKind::kWta;
  if (std::strcmp(name, "exact") == 0) return LayerKind::kExact;
  if (std::strcmp(name, "hs") == 0) return LayerKind::kHierarchical;
  throw ConfigError(std::string("unknown layer kind '") + name + "' (expected wta|exact|hs)");
}

ParamMatrix::ParamMatrix(std::size_t rows, std::size_t dim, bool with_bias)
    : rows_(rows), dim_(dim), weights_(rows * dim, 0.0), bias_(with_bias ? rows : 0, 0.0) {}

ParamMatrix::ParamMatrix(std::size_t rows, std::size_t dim, std::vector<Real> weights, std::vector<Real> bias)
    : rows_(rows), dim_(dim), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.size() != rows * dim) throw DimensionError("ParamMatrix: weight buffer is not rows*dim");
  if (!bias_.empty() && bias_.size() != rows) throw DimensionError("ParamMatrix: bias length is not rows");
}

ParamMatrix ParamMatrix::gaussian(std::size_t rows, std::size_t dim, std::uint64_t seed, bool with_bias) {
  ParamMatrix m(rows, dim, with_bias);
  Rng rng(seed);
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(dim));
  for (auto& w : m.weights_) w = rng.normal() * scale;
  return m;
}

void ParamMatrix::check_finite() const {
  for (Real w : weights_) {
    if (!std::isfinite(w)) throw NumericError("ParamMatrix: non-finite weight");
  }
  for (Real b : bias_) {
    if (!std::isfinite(b)) throw NumericError("ParamMatrix: non-finite bias");
  }
}

Real dot(std::span<const Real> a, std::span<const Real> b) {
  const std::size_t n = a.size();
  Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace wta
