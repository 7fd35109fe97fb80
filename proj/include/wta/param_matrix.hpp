#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wta/types.hpp"

namespace wta {

/// Output-layer weights: one row of length `dim` per class, row-major, plus an
/// optional per-class bias used only by the logistic layer.
class ParamMatrix {
 public:
  ParamMatrix() = default;
  ParamMatrix(std::size_t rows, std::size_t dim, bool with_bias = false);
  ParamMatrix(std::size_t rows, std::size_t dim, std::vector<Real> weights, std::vector<Real> bias = {});

  /// Zero-mean Gaussian entries with standard deviation 1/sqrt(dim); bias zero.
  static ParamMatrix gaussian(std::size_t rows, std::size_t dim, std::uint64_t seed, bool with_bias = false);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool has_bias() const { return !bias_.empty(); }

  std::span<const Real> row(std::size_t j) const { return {weights_.data() + j * dim_, dim_}; }
  std::span<Real> row(std::size_t j) { return {weights_.data() + j * dim_, dim_}; }

  Real bias(std::size_t j) const { return bias_.empty() ? 0.0 : bias_[j]; }
  Real& bias_ref(std::size_t j) { return bias_[j]; }

  const std::vector<Real>& weights() const { return weights_; }
  std::vector<Real>& weights() { return weights_; }
  const std::vector<Real>& biases() const { return bias_; }

  /// Throws NumericError if any entry is non-finite.
  void check_finite() const;

  friend bool operator==(const ParamMatrix&, const ParamMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<Real> weights_;
  std::vector<Real> bias_;
};

/// Plain left-to-right dot product (four interleaved partial sums, fixed order).
Real dot(std::span<const Real> a, std::span<const Real> b);

}  // namespace wta
