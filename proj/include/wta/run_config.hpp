#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include "wta/bench.hpp"
#include "wta/trainer.hpp"
#include "wta/types.hpp"
#include "wta/wta_hash.hpp"

namespace wta {

struct SyntheticSpec {
  std::uint32_t classes = 100;
  std::uint32_t dim = 32;
  std::uint32_t per_class = 10;
  std::uint32_t test_per_class = 2;
  double spread = 0.1;
  std::uint64_t seed = 7;
};

/// Where training and evaluation data come from: files or a generator.
struct DataSpec {
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> test;
  std::optional<SyntheticSpec> synthetic;
};

struct OutputSpec {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> log;
  std::optional<std::filesystem::path> test_data;  // generated test split, binary
  std::optional<std::filesystem::path> bench;      // bench CSV
};

/// Everything a subcommand needs, validated as a whole.
///
/// JSON layout (every key optional, unknown keys rejected):
///   profile: "full" (k=16, P=3000, M=1000, default) | "desk" (k=16, P=120, M=40)
///   layer: "wta" | "exact" | "hs";  mode: "softmax" | "logistic"
///   wta: {k, P, M, seed}
///   train: {learning_rate, decay, decay_interval, momentum, batch_size, K,
///           rehash_batch, refresh_touched, steps, seed}
///   data: {train, test, synthetic: {classes, dim, per_class, test_per_class, spread, seed}}
///   output: {checkpoint, log, test_data, bench}
///   bench: {classes, dim, batch_sizes, K_values, repetitions, warmup,
///           agreement_queries, include_hs, threads, seed}
struct RunConfig {
  std::string profile = "full";
  LayerKind layer = LayerKind::kWta;
  OutputMode mode = OutputMode::kSoftmax;
  std::optional<std::uint32_t> wta_window;
  std::optional<std::uint32_t> wta_permutations;
  std::optional<std::uint32_t> wta_bands;
  std::uint64_t wta_seed = 1;
  TrainConfig train;
  DataSpec data;
  OutputSpec output;
  ForwardBenchConfig bench;

  /// WTA parameters for `dim` after applying the profile and explicit keys.
  WtaParams wta_params(std::uint32_t dim) const;

  static RunConfig from_json(const nlohmann::json& j);
  /// Effective configuration with defaults resolved.
  nlohmann::json to_json() const;
};

/// Parses a JSON config file, applying `overrides` ("section.key=value",
/// value parsed as JSON when possible, else taken as a string) first.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides = {});

}  // namespace wta
