// Fixed-size hash set: one Harris-Michael list per bucket, bucket = key mod
// bucket count.
#pragma once

#include <vector>

#include "reclaim/ds/hm_list.hpp"

namespace reclaim {

template <class Smr>
class HashTable {
  using Core = HmCore<Smr>;

 public:
  static constexpr DsKind ds_kind = DsKind::hash_table;

  explicit HashTable(Smr& smr, DsConfig cfg = {})
      : core_(smr, cfg.restart_from_head), buckets_(cfg.buckets == 0 ? 1 : cfg.buckets) {
    for (auto& h : buckets_) h = core_.make_head();
  }

  ~HashTable() {
    for (auto* h : buckets_) core_.destroy_list(h);
  }

  HashTable(const HashTable&) = delete;
  HashTable& operator=(const HashTable&) = delete;

  bool insert(int tid, Key key) { return core_.insert(bucket(key), tid, key); }
  bool remove(int tid, Key key) { return core_.remove(bucket(key), tid, key); }
  bool contains(int tid, Key key) {
    NoHook none;
    return core_.contains(bucket(key), tid, key, none);
  }
  template <class Hook>
  bool contains_with_hook(int tid, Key key, Hook&& hook) {
    return core_.contains(bucket(key), tid, key, hook);
  }

  /// All keys, sorted.
  std::vector<Key> keys() const {
    std::vector<Key> out;
    for (auto* h : buckets_) core_.collect_keys(h, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool check_invariants() const {
    for (std::size_t b = 0; b < buckets_.size(); ++b) {
      std::vector<Key> k;
      core_.collect_keys(buckets_[b], k);
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (k[i] % buckets_.size() != b) return false;
        if (i > 0 && k[i - 1] >= k[i]) return false;
      }
    }
    return true;
  }

  [[nodiscard]] std::size_t bucket_count() const noexcept { return buckets_.size(); }

 private:
  typename Core::Node* bucket(Key key) const { return buckets_[key % buckets_.size()]; }

  Core core_;
  std::vector<typename Core::Node*> buckets_;
};

}  // namespace reclaim
