#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "wta/model.hpp"
#include "wta/param_matrix.hpp"

namespace wta {

/// Model, index and training progress. Momentum state is not stored.
struct Checkpoint {
  Model model;
  std::uint64_t step = 0;
  std::uint64_t cursor = 0;
};

void save_param_matrix(const ParamMatrix& m, std::ostream& out);
ParamMatrix load_param_matrix(std::istream& in);

/// Versioned little-endian format (magic "WTAC"), written atomically.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wta
