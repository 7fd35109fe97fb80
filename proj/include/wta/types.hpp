#pragma once

#include <cstdint>

namespace wta {

using ClassId = std::uint32_t;
using Real = double;

enum class OutputMode : std::uint8_t { kSoftmax = 0, kLogistic = 1 };

enum class LayerKind : std::uint8_t { kWta = 0, kExact = 1, kHierarchical = 2 };

const char* to_string(OutputMode mode);
const char* to_string(LayerKind kind);
OutputMode parse_output_mode(const char* name);
LayerKind parse_layer_kind(const char* name);

}  // namespace wta
