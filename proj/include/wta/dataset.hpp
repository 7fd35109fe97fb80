#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "wta/types.hpp"

namespace wta {

/// Parameters a synthetic dataset was generated with (zero when not synthetic).
struct GeneratorInfo {
  std::uint64_t seed = 0;
  std::uint32_t per_class = 0;
  double spread = 0.0;
  friend bool operator==(const GeneratorInfo&, const GeneratorInfo&) = default;
};

/// Feature vectors (float32) with a set of class labels each.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::uint32_t dim, std::uint32_t num_classes) : dim_(dim), num_classes_(num_classes) {}

  /// Throws DimensionError / UsageError / InputError on a bad example.
  void add(std::span<const float> features, std::span<const ClassId> labels);

  std::size_t size() const { return label_offsets_.size() - 1; }
  bool empty() const { return size() == 0; }
  std::uint32_t dim() const { return dim_; }
  std::uint32_t num_classes() const { return num_classes_; }

  std::span<const float> features(std::size_t i) const { return {features_.data() + i * dim_, dim_}; }
  std::span<const ClassId> labels(std::size_t i) const {
    return {labels_.data() + label_offsets_[i], label_offsets_[i + 1] - label_offsets_[i]};
  }
  /// Features of example i widened to double.
  std::vector<double> features_f64(std::size_t i) const;
  void features_f64(std::size_t i, std::span<double> out) const;

  GeneratorInfo& generator() { return generator_; }
  const GeneratorInfo& generator() const { return generator_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::uint32_t dim_ = 0;
  std::uint32_t num_classes_ = 0;
  std::vector<float> features_;
  std::vector<std::size_t> label_offsets_{0};
  std::vector<ClassId> labels_;
  GeneratorInfo generator_;
};

/// Class centers uniform on the unit sphere; each example is its center plus
/// isotropic Gaussian noise scaled by `spread`. Examples are class-major.
Dataset gen_clustered(std::uint32_t num_classes, std::uint32_t dim, std::uint32_t per_class, double spread,
                      std::uint64_t seed);

/// Moves the last `test_per_class` examples of each class (by first label)
/// into the second dataset.
std::pair<Dataset, Dataset> split_per_class(const Dataset& data, std::uint32_t test_per_class);

/// Little-endian binary format (magic "WTAD").
void save_dataset_binary(const Dataset& data, const std::filesystem::path& path);
/// Plain-text format, one example per line.
void save_dataset_text(const Dataset& data, const std::filesystem::path& path);
/// Detects the format from the first bytes.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace wta
