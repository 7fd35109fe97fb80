#include "wta/lsh_index.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "wta/binary_io.hpp"
#include "wta/error.hpp"

namespace wta {

namespace {

constexpr std::uint32_t kDenseKeyBits = 16;
constexpr std::uint32_t kIndexFormatVersion = 1;

bool ranks_before(const Candidate& a, const Candidate& b) {
  return a.count != b.count ? a.count > b.count : a.id < b.id;
}

}  // namespace

BandTable::BandTable(std::uint32_t key_bits) : dense_(key_bits <= kDenseKeyBits) {
  if (dense_) dense_buckets_.resize(std::size_t{1} << key_bits);
}

const std::vector<ClassId>* BandTable::find(std::uint64_t key) const {
  if (dense_) {
    const auto& bucket = dense_buckets_[key];
    return bucket.empty() ? nullptr : &bucket;
  }
  auto it = sparse_buckets_.find(key);
  return it == sparse_buckets_.end() ? nullptr : &it->second;
}

void BandTable::insert(std::uint64_t key, ClassId id) {
  if (dense_) {
    dense_buckets_[key].push_back(id);
  } else {
    sparse_buckets_[key].push_back(id);
  }
}

void BandTable::erase(std::uint64_t key, ClassId id) {
  auto drop = [id](std::vector<ClassId>& bucket) {
    auto it = std::find(bucket.begin(), bucket.end(), id);
    if (it == bucket.end()) throw UsageError("BandTable: id missing from its bucket");
    *it = bucket.back();
    bucket.pop_back();
  };
  if (dense_) {
    drop(dense_buckets_[key]);
    return;
  }
  auto it = sparse_buckets_.find(key);
  if (it == sparse_buckets_.end()) throw UsageError("BandTable: bucket missing");
  drop(it->second);
  if (it->second.empty()) sparse_buckets_.erase(it);
}

std::size_t BandTable::occupied_buckets() const {
  if (!dense_) return sparse_buckets_.size();
  return static_cast<std::size_t>(
      std::count_if(dense_buckets_.begin(), dense_buckets_.end(), [](const auto& b) { return !b.empty(); }));
}

std::vector<std::uint64_t> BandTable::sorted_sparse_keys() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(sparse_buckets_.size());
  for (const auto& [key, ids] : sparse_buckets_) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

LshIndex::LshIndex(const WtaParams& params) : params_(params) {
  params_.validate();
  perms_ = gen_permutations(params_);
  tables_.reserve(params_.bands);
  for (std::uint32_t m = 0; m < params_.bands; ++m) tables_.emplace_back(params_.key_bits());
  packed_bytes_ = params_.packed_bytes();
}

LshIndex LshIndex::build(const ParamMatrix& weights, const WtaParams& params) {
  if (weights.rows() > 0 && weights.dim() != params.dim) {
    throw DimensionError("index_build: weight rows have dim " + std::to_string(weights.dim()) + ", params say " +
                         std::to_string(params.dim));
  }
  LshIndex index(params);
  index.present_.reserve(weights.rows());
  index.packed_codes_.reserve(weights.rows() * index.packed_bytes_);
  for (std::size_t j = 0; j < weights.rows(); ++j) index.insert(static_cast<ClassId>(j), weights.row(j));
  return index;
}

bool LshIndex::contains(ClassId id) const { return id < present_.size() && present_[id] != 0; }

std::uint64_t LshIndex::stored_key(ClassId id, std::uint32_t band) const {
  std::span<const std::uint8_t> packed(packed_codes_.data() + static_cast<std::size_t>(id) * packed_bytes_,
                                       packed_bytes_);
  return read_bits(packed, static_cast<std::size_t>(band) * params_.key_bits(), params_.key_bits());
}

std::vector<std::uint64_t> LshIndex::stored_keys(ClassId id) const {
  if (!contains(id)) throw UsageError("stored_keys: id " + std::to_string(id) + " is not indexed");
  std::vector<std::uint64_t> keys(params_.bands);
  for (std::uint32_t m = 0; m < params_.bands; ++m) keys[m] = stored_key(id, m);
  return keys;
}

void LshIndex::store(ClassId id, std::span<const std::uint64_t> keys, std::span<const std::uint8_t> packed) {
  if (id >= present_.size()) {
    present_.resize(static_cast<std::size_t>(id) + 1, 0);
    packed_codes_.resize(present_.size() * packed_bytes_, 0);
  }
  std::copy(packed.begin(), packed.end(), packed_codes_.begin() + static_cast<std::ptrdiff_t>(id * packed_bytes_));
  present_[id] = 1;
  for (std::uint32_t m = 0; m < params_.bands; ++m) tables_[m].insert(keys[m], id);
  ++size_;
}

void LshIndex::erase_stored(ClassId id) {
  for (std::uint32_t m = 0; m < params_.bands; ++m) tables_[m].erase(stored_key(id, m), id);
  present_[id] = 0;
  --size_;
}

void LshIndex::insert(ClassId id, std::span<const Real> w) {
  if (contains(id)) throw UsageError("index_insert: id " + std::to_string(id) + " is already indexed");
  const WtaCode code = wta_hash(w, perms_);
  std::vector<std::uint64_t> keys(params_.bands);
  band_keys_into(code.codes(), params_, keys);
  store(id, keys, code.packed());
}

void LshIndex::update(ClassId id, std::span<const Real> w_new) {
  if (!contains(id)) throw UsageError("index_update: id " + std::to_string(id) + " is not indexed");
  scratch_codes_.resize(params_.permutations);
  scratch_packed_.assign(packed_bytes_, 0);
  scratch_keys_.resize(params_.bands);
  wta_hash_into(w_new, perms_, scratch_codes_);
  pack_codes_into(scratch_codes_, params_.code_bits(), scratch_packed_);
  auto* old = packed_codes_.data() + static_cast<std::size_t>(id) * packed_bytes_;
  if (std::equal(scratch_packed_.begin(), scratch_packed_.end(), old)) return;
  band_keys_into(scratch_codes_, params_, scratch_keys_);
  for (std::uint32_t m = 0; m < params_.bands; ++m) {
    const std::uint64_t before = stored_key(id, m);
    if (before == scratch_keys_[m]) continue;
    tables_[m].erase(before, id);
    tables_[m].insert(scratch_keys_[m], id);
  }
  std::copy(scratch_packed_.begin(), scratch_packed_.end(), old);
}

void LshIndex::remove(ClassId id) {
  if (!contains(id)) throw UsageError("index_remove: id " + std::to_string(id) + " is not indexed");
  erase_stored(id);
}

template <typename T>
CandidateSet LshIndex::query_impl(std::span<const T> x, std::size_t top_k, QueryScratch& scratch) const {
  if (x.size() != params_.dim) {
    throw DimensionError("query: vector has " + std::to_string(x.size()) + " elements, expected " +
                         std::to_string(params_.dim));
  }
  if (top_k == 0) throw UsageError("query: K must be >= 1");
  scratch.codes.resize(params_.permutations);
  scratch.keys.resize(params_.bands);
  if (scratch.counts.size() < present_.size()) scratch.counts.resize(present_.size(), 0);
  scratch.touched.clear();

  wta_hash_into(x, perms_, scratch.codes);
  band_keys_into(scratch.codes, params_, scratch.keys);

  std::uint32_t* counts = scratch.counts.data();
  for (std::uint32_t m = 0; m < params_.bands; ++m) {
    const auto* bucket = tables_[m].find(scratch.keys[m]);
    if (bucket == nullptr) continue;
    for (ClassId id : *bucket) {
      if (counts[id]++ == 0) scratch.touched.push_back(id);
    }
  }

  CandidateSet out;
  out.reserve(scratch.touched.size());
  for (ClassId id : scratch.touched) {
    out.push_back({id, counts[id]});
    counts[id] = 0;
  }
  if (out.size() > top_k) {
    std::nth_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(top_k), out.end(), ranks_before);
    out.resize(top_k);
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

CandidateSet LshIndex::query(std::span<const Real> x, std::size_t top_k) const {
  QueryScratch scratch;
  return query_impl(x, top_k, scratch);
}

CandidateSet LshIndex::query(std::span<const Real> x, std::size_t top_k, QueryScratch& scratch) const {
  return query_impl(x, top_k, scratch);
}

CandidateSet LshIndex::query(std::span<const float> x, std::size_t top_k, QueryScratch& scratch) const {
  return query_impl(x, top_k, scratch);
}

bool LshIndex::equivalent(const LshIndex& other) const {
  if (!(params_ == other.params_) || size_ != other.size_) return false;
  for (std::uint32_t m = 0; m < params_.bands; ++m) {
    std::vector<std::pair<std::uint64_t, std::vector<ClassId>>> a, b;
    tables_[m].for_each_bucket([&](std::uint64_t key, const std::vector<ClassId>& ids) { a.emplace_back(key, ids); });
    other.tables_[m].for_each_bucket(
        [&](std::uint64_t key, const std::vector<ClassId>& ids) { b.emplace_back(key, ids); });
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].first != b[i].first) return false;
      std::sort(a[i].second.begin(), a[i].second.end());
      std::sort(b[i].second.begin(), b[i].second.end());
      if (a[i].second != b[i].second) return false;
    }
  }
  return true;
}

void LshIndex::save(std::ostream& out) const {
  BinaryWriter w(out);
  w.magic("WTAI");
  w.u32(kIndexFormatVersion);
  w.u32(params_.dim);
  w.u32(params_.window);
  w.u32(params_.permutations);
  w.u32(params_.bands);
  w.u64(params_.seed);
  w.u64(present_.size());
  w.u64(size_);
  for (std::uint32_t m = 0; m < params_.bands; ++m) {
    w.u64(tables_[m].occupied_buckets());
    tables_[m].for_each_bucket([&](std::uint64_t key, const std::vector<ClassId>& ids) {
      std::vector<ClassId> sorted = ids;
      std::sort(sorted.begin(), sorted.end());
      w.u64(key);
      w.u32(static_cast<std::uint32_t>(sorted.size()));
      for (ClassId id : sorted) w.u32(id);
    });
  }
}

LshIndex LshIndex::load(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic("WTAI");
  const std::uint32_t version = r.u32();
  if (version != kIndexFormatVersion) throw IoError("unsupported index format version " + std::to_string(version));
  WtaParams params;
  params.dim = r.u32();
  params.window = r.u32();
  params.permutations = r.u32();
  params.bands = r.u32();
  params.seed = r.u64();
  const std::uint64_t capacity = r.u64();
  const std::uint64_t size = r.u64();
  try {
    params.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("index file: ") + e.what());
  }

  LshIndex index(params);
  const std::uint32_t bands = params.bands;
  const std::uint64_t key_limit = params.key_bits() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << params.key_bits()) - 1;
  std::vector<std::uint64_t> keys(capacity * bands);
  std::vector<std::uint32_t> seen(capacity, 0);
  for (std::uint32_t m = 0; m < bands; ++m) {
    const std::uint64_t buckets = r.u64();
    for (std::uint64_t b = 0; b < buckets; ++b) {
      const std::uint64_t key = r.u64();
      if (key > key_limit) throw IoError("index file: band key out of range");
      const std::uint32_t count = r.u32();
      for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t id = r.u32();
        if (id >= capacity || seen[id] != m) throw IoError("index file: class id listed twice or out of range");
        keys[static_cast<std::size_t>(id) * bands + m] = key;
        seen[id] = m + 1;
      }
    }
    // Every id seen so far must appear in this table as well.
    for (std::uint64_t id = 0; id < capacity; ++id) {
      if (seen[id] != 0 && seen[id] != m + 1) throw IoError("index file: class missing from a table");
    }
  }

  index.present_.assign(capacity, 0);
  index.packed_codes_.assign(capacity * index.packed_bytes_, 0);
  std::vector<std::uint16_t> codes(params.permutations);
  for (std::uint64_t id = 0; id < capacity; ++id) {
    if (seen[id] == 0) continue;
    std::span<const std::uint64_t> id_keys(keys.data() + id * bands, bands);
    for (std::uint32_t m = 0; m < bands; ++m) {
      const auto band_codes = unpack_band_key(BandKey{id_keys[m]}, params);
      std::copy(band_codes.begin(), band_codes.end(), codes.begin() + static_cast<std::ptrdiff_t>(m) * params.band_width());
    }
    index.store(static_cast<ClassId>(id), id_keys, WtaCode(codes, params.code_bits()).packed());
  }
  if (index.size_ != size) throw IoError("index file: size field does not match contents");
  return index;
}

}  // namespace wta
