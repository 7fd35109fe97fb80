#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "wta/param_matrix.hpp"
#include "wta/types.hpp"
#include "wta/wta_hash.hpp"

namespace wta {

struct Candidate {
  ClassId id = 0;
  std::uint32_t count = 0;  // number of bands on which query and class agree, in [1, M]
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Retrieved classes ordered by descending count, ties by ascending id.
using CandidateSet = std::vector<Candidate>;

/// Reusable per-thread buffers for LshIndex::query.
struct QueryScratch {
  std::vector<std::uint32_t> counts;
  std::vector<ClassId> touched;
  std::vector<std::uint16_t> codes;
  std::vector<std::uint64_t> keys;
};

/// One hash table per band. Key spaces of at most 2^16 buckets are stored as
/// a flat array, wider ones in a hash map.
class BandTable {
 public:
  explicit BandTable(std::uint32_t key_bits = 0);

  const std::vector<ClassId>* find(std::uint64_t key) const;
  void insert(std::uint64_t key, ClassId id);
  void erase(std::uint64_t key, ClassId id);

  /// Calls fn(key, ids) for every non-empty bucket, in ascending key order.
  template <typename Fn>
  void for_each_bucket(Fn&& fn) const;

  std::size_t occupied_buckets() const;

 private:
  std::vector<std::uint64_t> sorted_sparse_keys() const;

  bool dense_ = true;
  std::vector<std::vector<ClassId>> dense_buckets_;
  std::unordered_map<std::uint64_t, std::vector<ClassId>> sparse_buckets_;
};

/// Banded WTA hash tables over class parameter vectors.
///
/// Reader/writer contract: const member functions never mutate shared state,
/// so any number of threads may query concurrently; insert/update/remove need
/// exclusive access.
class LshIndex {
 public:
  LshIndex() = default;
  explicit LshIndex(const WtaParams& params);

  /// Indexes every row of `weights` under ids 0..rows-1.
  static LshIndex build(const ParamMatrix& weights, const WtaParams& params);

  void insert(ClassId id, std::span<const Real> w);
  /// Remove-then-insert; a no-op when the hash of w_new is unchanged.
  void update(ClassId id, std::span<const Real> w_new);
  void remove(ClassId id);
  bool contains(ClassId id) const;

  CandidateSet query(std::span<const Real> x, std::size_t top_k) const;
  CandidateSet query(std::span<const Real> x, std::size_t top_k, QueryScratch& scratch) const;
  CandidateSet query(std::span<const float> x, std::size_t top_k, QueryScratch& scratch) const;

  const WtaParams& params() const { return params_; }
  const PermutationSet& permutations() const { return perms_; }
  std::size_t size() const { return size_; }
  /// One past the largest id slot ever allocated.
  std::size_t capacity() const { return present_.size(); }
  const BandTable& table(std::size_t m) const { return tables_[m]; }

  /// The band keys under which `id` is currently stored.
  std::vector<std::uint64_t> stored_keys(ClassId id) const;

  /// Same parameters and the same set of ids in every bucket (order within a
  /// bucket is not significant).
  bool equivalent(const LshIndex& other) const;

  /// Versioned little-endian binary format, see README.
  void save(std::ostream& out) const;
  static LshIndex load(std::istream& in);

 private:
  template <typename T>
  CandidateSet query_impl(std::span<const T> x, std::size_t top_k, QueryScratch& scratch) const;
  void store(ClassId id, std::span<const std::uint64_t> keys, std::span<const std::uint8_t> packed);
  void erase_stored(ClassId id);
  std::uint64_t stored_key(ClassId id, std::uint32_t band) const;

  WtaParams params_{};
  PermutationSet perms_;
  std::vector<BandTable> tables_;
  std::size_t size_ = 0;
  std::size_t packed_bytes_ = 0;
  std::vector<std::uint8_t> packed_codes_;  // capacity * packed_bytes_
  std::vector<std::uint8_t> present_;
  std::vector<std::uint16_t> scratch_codes_;
  std::vector<std::uint8_t> scratch_packed_;
  std::vector<std::uint64_t> scratch_keys_;
};

template <typename Fn>
void BandTable::for_each_bucket(Fn&& fn) const {
  if (dense_) {
    for (std::size_t key = 0; key < dense_buckets_.size(); ++key) {
      if (!dense_buckets_[key].empty()) fn(static_cast<std::uint64_t>(key), dense_buckets_[key]);
    }
  } else {
    for (std::uint64_t key : sorted_sparse_keys()) fn(key, sparse_buckets_.at(key));
  }
}

}  // namespace wta
