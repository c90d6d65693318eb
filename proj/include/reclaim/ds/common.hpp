// Helpers shared by the set structures.
#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "reclaim/smr/common.hpp"

namespace reclaim {

using Key = std::uint64_t;

/// Largest key a caller may store; the two values above it are sentinels.
inline constexpr Key kMaxKey = std::numeric_limits<Key>::max() - 2;
inline constexpr Key kInf1 = std::numeric_limits<Key>::max() - 1;
inline constexpr Key kInf2 = std::numeric_limits<Key>::max();

enum class DsKind { lazy_list, harris_list, hm_list, hash_table, ext_bst };

inline constexpr DsKind kAllStructures[] = {DsKind::lazy_list, DsKind::harris_list,
                                            DsKind::hm_list, DsKind::hash_table,
                                            DsKind::ext_bst};

inline constexpr std::string_view to_string(DsKind k) {
  switch (k) {
    case DsKind::lazy_list: return "lazy_list";
    case DsKind::harris_list: return "harris_list";
    case DsKind::hm_list: return "hm_list";
    case DsKind::hash_table: return "hash_table";
    case DsKind::ext_bst: return "ext_bst";
  }
  return "?";
}

inline DsKind parse_structure(std::string_view s) {
  for (DsKind k : kAllStructures)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown structure: " + std::string(s));
}

struct DsConfig {
  std::size_t buckets = 1024;
  /// HM list: restart traversals from the head after unlinking a marked
  /// node. Always on under restart-capable schemes.
  bool restart_from_head = false;
};

/// Test-and-test-and-set lock that yields while contended.
class SpinLock {
 public:
  void lock() noexcept {
    unsigned spins = 0;
    for (;;) {
      if (word_.load(std::memory_order_relaxed) == 0 &&
          word_.exchange(1, std::memory_order_acquire) == 0)
        return;
      spin_pause(spins);
    }
  }
  void unlock() noexcept { word_.store(0, std::memory_order_release); }

 private:
  std::atomic<std::uint32_t> word_{0};
};

inline constexpr std::uintptr_t kMark = 1;
inline bool is_marked(std::uintptr_t v) noexcept { return (v & kMark) != 0; }
template <class N>
inline N* as_node(std::uintptr_t v) noexcept {
  return reinterpret_cast<N*>(v & ~kMark);
}
template <class N>
inline std::uintptr_t as_word(N* n) noexcept {
  return reinterpret_cast<std::uintptr_t>(n);
}

/// Routes a traversal read through the scheme's read hook when it has one.
template <class Smr, class Src>
inline auto smr_read(Smr& smr, int tid, const Src& src, int slot) {
  if constexpr (Smr::descriptor.needs_read_hook) {
    return smr.protect(tid, src, slot);
  } else {
    (void)tid;
    (void)slot;
    return src.load(std::memory_order_acquire);
  }
}

struct NoHook {
  void operator()() const noexcept {}
};

}  // namespace reclaim
