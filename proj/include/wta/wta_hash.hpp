#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "wta/types.hpp"

namespace wta {

/// Winner-take-all hash configuration.
///
/// `window` elements of each of `permutations` random permutations are
/// compared; the code of a permutation is the window position of the largest
/// element. Codes are grouped into `bands` consecutive runs of
/// permutations / bands codes, each run packed into one band key.
struct WtaParams {
  std::uint32_t dim = 0;
  std::uint32_t window = 16;
  std::uint32_t permutations = 3000;
  std::uint32_t bands = 1000;
  std::uint64_t seed = 1;

  /// Throws ConfigError unless 2 <= window <= dim, window is a power of two,
  /// bands divides permutations and a band key fits in 64 bits.
  void validate() const;

  std::uint32_t code_bits() const;   // log2(window)
  std::uint32_t band_width() const;  // permutations / bands
  std::uint32_t key_bits() const;    // band_width * code_bits
  std::size_t packed_bytes() const;  // ceil(permutations * code_bits / 8)

  /// k=16, P=3000, M=1000.
  static WtaParams full_defaults(std::uint32_t dim, std::uint64_t seed = 1);
  /// k=16, P=120, M=40: the same band width at a fraction of the hashing cost.
  static WtaParams desk_defaults(std::uint32_t dim, std::uint64_t seed = 1);

  friend bool operator==(const WtaParams&, const WtaParams&) = default;
};

/// The first `window` entries of `count` independent uniformly random
/// permutations of [0, dim), stored row-major.
class PermutationSet {
 public:
  PermutationSet() = default;
  PermutationSet(std::uint32_t dim, std::uint32_t window, std::vector<std::uint32_t> indices);

  std::uint32_t dim() const { return dim_; }
  std::uint32_t window() const { return window_; }
  std::uint32_t size() const { return window_ == 0 ? 0 : static_cast<std::uint32_t>(indices_.size() / window_); }

  std::span<const std::uint32_t> operator[](std::size_t p) const {
    return {indices_.data() + p * window_, window_};
  }
  const std::vector<std::uint32_t>& flat() const { return indices_; }

  friend bool operator==(const PermutationSet&, const PermutationSet&) = default;

 private:
  std::uint32_t dim_ = 0;
  std::uint32_t window_ = 0;
  std::vector<std::uint32_t> indices_;
};

/// Partial Fisher-Yates shuffles driven by Rng(params.seed); permutation p
/// consumes exactly `window` bounded draws, in order p = 0, 1, ...
PermutationSet gen_permutations(const WtaParams& params);

/// Ordinal hash of one vector: one code in [0, window) per permutation.
class WtaCode {
 public:
  WtaCode() = default;
  WtaCode(std::vector<std::uint16_t> codes, std::uint32_t code_bits);

  const std::vector<std::uint16_t>& codes() const { return codes_; }
  std::uint32_t code_bits() const { return code_bits_; }
  std::size_t size() const { return codes_.size(); }
  std::uint16_t operator[](std::size_t p) const { return codes_[p]; }

  /// Little-endian bit stream: code p occupies bits [p*b, (p+1)*b).
  std::vector<std::uint8_t> packed() const;
  static WtaCode from_packed(std::span<const std::uint8_t> bytes, std::size_t count,
                             std::uint32_t code_bits);

  friend bool operator==(const WtaCode&, const WtaCode&) = default;

 private:
  std::vector<std::uint16_t> codes_;
  std::uint32_t code_bits_ = 0;
};

struct BandKey {
  std::uint64_t value = 0;
  friend auto operator<=>(const BandKey&, const BandKey&) = default;
};

/// Throws DimensionError on a length mismatch and InputError on NaN.
WtaCode wta_hash(std::span<const double> x, const PermutationSet& perms);
WtaCode wta_hash(std::span<const float> x, const PermutationSet& perms);

/// Allocation-free variants used on hot paths; `out` must hold perms.size() codes.
void wta_hash_into(std::span<const double> x, const PermutationSet& perms, std::span<std::uint16_t> out);
void wta_hash_into(std::span<const float> x, const PermutationSet& perms, std::span<std::uint16_t> out);

/// Band m packs codes [m*r, (m+1)*r) as sum_j code[m*r + j] * window^j.
std::vector<BandKey> band_keys(const WtaCode& code, const WtaParams& params);
void band_keys_into(std::span<const std::uint16_t> codes, const WtaParams& params,
                    std::span<std::uint64_t> out);

/// Inverse of the packing of one band.
std::vector<std::uint16_t> unpack_band_key(BandKey key, const WtaParams& params);

/// Packs codes of `code_bits` bits each into a little-endian bit stream; `out` must be zeroed
/// and hold ceil(codes.size() * code_bits / 8) bytes.
void pack_codes_into(std::span<const std::uint16_t> codes, std::uint32_t code_bits, std::span<std::uint8_t> out);

/// Reads `width` (<= 64) bits starting at bit `offset` of a little-endian bit stream.
std::uint64_t read_bits(std::span<const std::uint8_t> bytes, std::size_t offset, std::uint32_t width);

}  // namespace wta
