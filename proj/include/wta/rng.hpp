#pragma once

#include <array>
#include <cstdint>

namespace wta {

/// SplitMix64 (Steele, Lea, Flood 2014). Used only to expand a 64-bit seed
/// into generator state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

/// xoshiro256** version 1.0 (Blackman and Vigna), state seeded from four
/// consecutive SplitMix64 outputs. Every random quantity in the library comes
/// from this generator so permutation sets and datasets are reproducible
/// across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  /// Raw generator state, for checking against reference output.
  static Rng from_state(const std::array<std::uint64_t, 4>& state);

  std::uint64_t next();

  /// Uniform integer in [0, bound) by rejection on the low end of the range
  /// followed by modulo reduction. bound must be nonzero.
  std::uint64_t bounded(std::uint64_t bound);

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform();

  /// Standard normal deviate (Box-Muller, cosine branch only).
  double normal();

 private:
  Rng() = default;
  std::array<std::uint64_t, 4> s_{};
};

/// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace wta
