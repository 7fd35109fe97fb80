#include "wta/wta_hash.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "wta/error.hpp"
#include "wta/rng.hpp"

namespace wta {

void WtaParams::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("wta params: " + msg); };
  if (dim < 1) fail("dim must be >= 1");
  if (permutations < 1) fail("permutations (P) must be >= 1");
  if (bands < 1) fail("bands (M) must be >= 1");
  if (window < 2) fail("window (k) must be >= 2");
  if (window > dim) fail("window (k) must not exceed dim (" + std::to_string(window) + " > " + std::to_string(dim) + ")");
  if (!std::has_single_bit(window)) fail("window (k) must be a power of two");
  if (window > (1u << 16)) fail("window (k) must be <= 65536");
  if (permutations % bands != 0) fail("bands (M) must divide permutations (P)");
  if (static_cast<std::uint64_t>(band_width()) * code_bits() > 64) fail("band key wider than 64 bits");
}

std::uint32_t WtaParams::code_bits() const { return static_cast<std::uint32_t>(std::countr_zero(window)); }

std::uint32_t WtaParams::band_width() const { return bands == 0 ? 0 : permutations / bands; }

std::uint32_t WtaParams::key_bits() const { return band_width() * code_bits(); }

std::size_t WtaParams::packed_bytes() const {
  return (static_cast<std::size_t>(permutations) * code_bits() + 7) / 8;
}

WtaParams WtaParams::full_defaults(std::uint32_t dim, std::uint64_t seed) {
  return WtaParams{dim, 16, 3000, 1000, seed};
}

WtaParams WtaParams::desk_defaults(std::uint32_t dim, std::uint64_t seed) {
  return WtaParams{dim, 16, 120, 40, seed};
}

PermutationSet::PermutationSet(std::uint32_t dim, std::uint32_t window, std::vector<std::uint32_t> indices)
    : dim_(dim), window_(window), indices_(std::move(indices)) {}

PermutationSet gen_permutations(const WtaParams& params) {
  params.validate();
  const std::uint32_t d = params.dim;
  const std::uint32_t k = params.window;
  Rng rng(params.seed);

  std::vector<std::uint32_t> scratch(d);
  for (std::uint32_t i = 0; i < d; ++i) scratch[i] = i;
  std::vector<std::uint32_t> swapped_with(k);

  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(params.permutations) * k);
  for (std::uint32_t p = 0; p < params.permutations; ++p) {
    for (std::uint32_t j = 0; j < k; ++j) {
      const auto r = j + static_cast<std::uint32_t>(rng.bounded(d - j));
      std::swap(scratch[j], scratch[r]);
      swapped_with[j] = r;
      out.push_back(scratch[j]);
    }
    // Undo in reverse so scratch is the identity again: O(k) per permutation.
    for (std::uint32_t j = k; j-- > 0;) std::swap(scratch[j], scratch[swapped_with[j]]);
  }
  return PermutationSet(d, k, std::move(out));
}

WtaCode::WtaCode(std::vector<std::uint16_t> codes, std::uint32_t code_bits)
    : codes_(std::move(codes)), code_bits_(code_bits) {}

std::vector<std::uint8_t> WtaCode::packed() const {
  std::vector<std::uint8_t> bytes((codes_.size() * code_bits_ + 7) / 8, 0);
  pack_codes_into(codes_, code_bits_, bytes);
  return bytes;
}

void pack_codes_into(std::span<const std::uint16_t> codes, std::uint32_t code_bits, std::span<std::uint8_t> out) {
  if (out.size() != (codes.size() * code_bits + 7) / 8) throw DimensionError("pack_codes: output has wrong length");
  std::uint64_t acc = 0;
  std::uint32_t filled = 0;
  std::size_t pos = 0;
  for (std::uint16_t c : codes) {
    acc |= static_cast<std::uint64_t>(c) << filled;
    filled += code_bits;
    while (filled >= 8) {
      out[pos++] = static_cast<std::uint8_t>(acc);
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) out[pos] = static_cast<std::uint8_t>(acc);
}

WtaCode WtaCode::from_packed(std::span<const std::uint8_t> bytes, std::size_t count, std::uint32_t code_bits) {
  if (bytes.size() != (count * code_bits + 7) / 8) throw DimensionError("packed code has wrong byte length");
  std::vector<std::uint16_t> codes(count);
  for (std::size_t p = 0; p < count; ++p) {
    codes[p] = static_cast<std::uint16_t>(read_bits(bytes, p * code_bits, code_bits));
  }
  return WtaCode(std::move(codes), code_bits);
}

std::uint64_t read_bits(std::span<const std::uint8_t> bytes, std::size_t offset, std::uint32_t width) {
  std::uint64_t value = 0;
  std::uint32_t filled = 0;
  while (filled < width) {
    const std::size_t pos = offset + filled;
    const std::uint32_t shift = static_cast<std::uint32_t>(pos % 8);
    const std::uint32_t take = std::min<std::uint32_t>(8 - shift, width - filled);
    const std::uint64_t chunk = (bytes[pos / 8] >> shift) & ((1u << take) - 1u);
    value |= chunk << filled;
    filled += take;
  }
  return value;
}

namespace {

template <typename T>
void hash_impl(std::span<const T> x, const PermutationSet& perms, std::span<std::uint16_t> out) {
  if (x.size() != perms.dim()) {
    throw DimensionError("wta_hash: vector has " + std::to_string(x.size()) + " elements, expected " +
                         std::to_string(perms.dim()));
  }
  if (out.size() != perms.size()) throw DimensionError("wta_hash: output span has wrong length");
  for (T v : x) {
    if (std::isnan(v)) throw InputError("wta_hash: NaN in input vector");
  }
  const std::uint32_t k = perms.window();
  const std::uint32_t* idx = perms.flat().data();
  const T* data = x.data();
  for (std::size_t p = 0; p < out.size(); ++p, idx += k) {
    T best = data[idx[0]];
    std::uint16_t arg = 0;
    for (std::uint32_t j = 1; j < k; ++j) {
      const T v = data[idx[j]];
      // Strict comparison keeps the first occurrence on ties.
      if (v > best) {
        best = v;
        arg = static_cast<std::uint16_t>(j);
      }
    }
    out[p] = arg;
  }
}

template <typename T>
WtaCode hash_alloc(std::span<const T> x, const PermutationSet& perms) {
  std::vector<std::uint16_t> codes(perms.size());
  hash_impl(x, perms, std::span<std::uint16_t>(codes));
  return WtaCode(std::move(codes), static_cast<std::uint32_t>(std::countr_zero(perms.window())));
}

}  // namespace

WtaCode wta_hash(std::span<const double> x, const PermutationSet& perms) { return hash_alloc(x, perms); }
WtaCode wta_hash(std::span<const float> x, const PermutationSet& perms) { return hash_alloc(x, perms); }

void wta_hash_into(std::span<const double> x, const PermutationSet& perms, std::span<std::uint16_t> out) {
  hash_impl(x, perms, out);
}
void wta_hash_into(std::span<const float> x, const PermutationSet& perms, std::span<std::uint16_t> out) {
  hash_impl(x, perms, out);
}

void band_keys_into(std::span<const std::uint16_t> codes, const WtaParams& params, std::span<std::uint64_t> out) {
  if (codes.size() != params.permutations) throw DimensionError("band_keys: code length does not match P");
  if (out.size() != params.bands) throw DimensionError("band_keys: output span has wrong length");
  const std::uint32_t r = params.band_width();
  const std::uint32_t b = params.code_bits();
  const std::uint16_t* c = codes.data();
  for (std::uint32_t m = 0; m < params.bands; ++m, c += r) {
    std::uint64_t key = 0;
    for (std::uint32_t j = r; j-- > 0;) key = (key << b) | c[j];
    out[m] = key;
  }
}

std::vector<BandKey> band_keys(const WtaCode& code, const WtaParams& params) {
  std::vector<std::uint64_t> raw(params.bands);
  band_keys_into(code.codes(), params, raw);
  std::vector<BandKey> keys(raw.size());
  for (std::size_t m = 0; m < raw.size(); ++m) keys[m].value = raw[m];
  return keys;
}

std::vector<std::uint16_t> unpack_band_key(BandKey key, const WtaParams& params) {
  const std::uint32_t r = params.band_width();
  const std::uint32_t b = params.code_bits();
  const std::uint64_t mask = (std::uint64_t{1} << b) - 1;
  std::vector<std::uint16_t> codes(r);
  std::uint64_t v = key.value;
  for (std::uint32_t j = 0; j < r; ++j, v >>= b) codes[j] = static_cast<std::uint16_t>(v & mask);
  return codes;
}

}  // namespace wta
