// Pieces shared by all reclamation schemes: capability descriptors, config,
// per-thread limbo bags, reservation tables and instrumentation counters.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "reclaim/guard_alloc.hpp"
#include "reclaim/runtime.hpp"

namespace reclaim {

enum class SchemeKind { none, ebr, hp, he, pophp, pophe, epochpop, nbr, nbrplus };

inline constexpr SchemeKind kAllSchemes[] = {
    SchemeKind::none,  SchemeKind::ebr,   SchemeKind::hp,
    SchemeKind::he,    SchemeKind::pophp, SchemeKind::pophe,
    SchemeKind::epochpop, SchemeKind::nbr, SchemeKind::nbrplus};

inline constexpr std::string_view to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::none: return "none";
    case SchemeKind::ebr: return "ebr";
    case SchemeKind::hp: return "hp";
    case SchemeKind::he: return "he";
    case SchemeKind::pophp: return "pophp";
    case SchemeKind::pophe: return "pophe";
    case SchemeKind::epochpop: return "epochpop";
    case SchemeKind::nbr: return "nbr";
    case SchemeKind::nbrplus: return "nbrplus";
  }
  return "?";
}

inline SchemeKind parse_scheme(std::string_view s) {
  for (SchemeKind k : kAllSchemes)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown scheme: " + std::string(s));
}

struct SchemeDescriptor {
  SchemeKind kind;
  bool needs_read_hook;
  bool needs_phase_markers;
  bool needs_op_brackets;
  bool restart_capable;
  bool needs_era_header;
  int max_reservations;
};

struct SmrConfig {
  int max_hp = 3;
  int max_he = 3;
  std::size_t reclaim_freq = 32000;
  std::size_t epoch_freq = 100;
  std::size_t pop_reclaim_freq = 32000;
  /// SIZE_MAX disables the EpochPOP fallback.
  std::size_t epochpop_C = 2;
  std::size_t nbr_hi_watermark = 16384;
  double nbr_lo_fraction = 0.5;
  std::size_t nbr_scan_amortization = 64;
  int nbr_max_reservations = 3;
};

class TooManyReservations : public std::length_error {
 public:
  TooManyReservations() : std::length_error("too many reservations for one write phase") {}
};

inline constexpr std::uint64_t kEraNone = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kEpochQuiescent = std::numeric_limits<std::uint64_t>::max();

/// Address of a node handle with any low mark bits stripped.
template <class T>
inline std::uint64_t node_address(T* p) noexcept {
  return reinterpret_cast<std::uint64_t>(p);
}
inline std::uint64_t node_address(std::uintptr_t v) noexcept {
  return static_cast<std::uint64_t>(v & ~std::uintptr_t{1});
}

/// Hazard-era freeing rule: a node may go iff no reserved era falls inside
/// its [birth, retire] lifetime.
inline bool he_can_free(std::uint64_t birth_era, std::uint64_t retire_era,
                        std::span<const std::uint64_t> eras) noexcept {
  for (std::uint64_t e : eras) {
    if (e == kEraNone) continue;
    if (e >= birth_era && e <= retire_era) return false;
  }
  return true;
}

/// Same rule against a sorted era snapshot with the NONE entries removed.
inline bool he_can_free_sorted(std::uint64_t birth_era, std::uint64_t retire_era,
                               std::span<const std::uint64_t> sorted) noexcept {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), birth_era);
  return it == sorted.end() || *it > retire_era;
}

struct alignas(kCacheLine) ThreadCounters {
  std::atomic<std::uint64_t> fences_on_read_path{0};
  std::atomic<std::uint64_t> slow_path_triggers{0};
  std::atomic<std::uint64_t> pings_sent{0};
  std::atomic<std::uint64_t> epoch_bumps{0};
  std::atomic<std::uint64_t> reclaim_passes{0};
  std::atomic<std::uint64_t> freed{0};

  // Owner-only increment; readers may look concurrently.
  static void bump(std::atomic<std::uint64_t>& c, std::uint64_t by = 1) noexcept {
    c.store(c.load(std::memory_order_relaxed) + by, std::memory_order_relaxed);
  }
};

struct SmrStats {
  std::uint64_t fences_on_read_path = 0;
  std::uint64_t restarts = 0;
  std::uint64_t slow_path_triggers = 0;
  std::uint64_t pings_sent = 0;
  std::uint64_t epoch_bumps = 0;
  std::uint64_t reclaim_passes = 0;
  std::uint64_t freed = 0;
  std::uint64_t signals_sent = 0;
};

inline void accumulate(SmrStats& s, const ThreadCounters& c) {
  s.fences_on_read_path += c.fences_on_read_path.load(std::memory_order_relaxed);
  s.slow_path_triggers += c.slow_path_triggers.load(std::memory_order_relaxed);
  s.pings_sent += c.pings_sent.load(std::memory_order_relaxed);
  s.epoch_bumps += c.epoch_bumps.load(std::memory_order_relaxed);
  s.reclaim_passes += c.reclaim_passes.load(std::memory_order_relaxed);
  s.freed += c.freed.load(std::memory_order_relaxed);
}

/// Per-thread buffer of retired handles. Entries are kept in retire order;
/// a tail is an index into that order.
class LimboBag {
 public:
  LimboBag() { items_.reserve(1024); }

  void push(void* p) { items_.push_back(p); }
  [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
  [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
  [[nodiscard]] std::size_t tail() const noexcept { return items_.size(); }
  [[nodiscard]] void* operator[](std::size_t i) const noexcept { return items_[i]; }

  /// Visits entries [0, tail); those for which `keep` is false are passed to
  /// `release`. Survivors keep their relative order. Returns the number
  /// released.
  template <class Keep, class Release>
  std::size_t reclaim(std::size_t tail, Keep&& keep, Release&& release) {
    tail = std::min(tail, items_.size());
    std::size_t out = 0;
    std::size_t released = 0;
    for (std::size_t i = 0; i < tail; ++i) {
      void* p = items_[i];
      if (keep(p)) {
        items_[out++] = p;
      } else {
        release(p);
        ++released;
      }
    }
    if (released != 0) {
      std::move(items_.begin() + static_cast<std::ptrdiff_t>(tail), items_.end(),
                items_.begin() + static_cast<std::ptrdiff_t>(out));
      items_.resize(items_.size() - released);
    }
    return released;
  }

  /// Releases the leading run of entries satisfying `pred`.
  template <class Pred, class Release>
  std::size_t reclaim_prefix(Pred&& pred, Release&& release) {
    std::size_t n = 0;
    while (n < items_.size() && pred(items_[n])) release(items_[n++]);
    items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  template <class Release>
  void release_all(Release&& release) {
    for (void* p : items_) release(p);
    items_.clear();
  }

 private:
  std::vector<void*> items_;
};

/// N rows of R single-writer slots, one cache-line-aligned row per thread.
class ReservationTable {
 public:
  ReservationTable(int threads, int width, std::uint64_t empty)
      : threads_(threads),
        width_(width),
        stride_(round_up(static_cast<std::size_t>(width))),
        empty_(empty),
        cells_(std::make_unique<Cell[]>(static_cast<std::size_t>(threads) * stride_)) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(threads) * stride_; ++i)
      cells_[i].v.store(empty, std::memory_order_relaxed);
  }

  std::atomic<std::uint64_t>& at(int tid, int slot) noexcept {
    return cells_[static_cast<std::size_t>(tid) * stride_ + static_cast<std::size_t>(slot)].v;
  }
  const std::atomic<std::uint64_t>& at(int tid, int slot) const noexcept {
    return cells_[static_cast<std::size_t>(tid) * stride_ + static_cast<std::size_t>(slot)].v;
  }

  void clear_row(int tid, std::memory_order order = std::memory_order_release) noexcept {
    for (int s = 0; s < width_; ++s) at(tid, s).store(empty_, order);
  }

  /// Appends every non-empty slot of the first `rows` rows to `out`.
  void collect(int rows, std::vector<std::uint64_t>& out) const {
    for (int t = 0; t < rows; ++t)
      for (int s = 0; s < width_; ++s) {
        std::uint64_t v = at(t, s).load(std::memory_order_acquire);
        if (v != empty_) out.push_back(v);
      }
  }

  [[nodiscard]] int threads() const noexcept { return threads_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] std::uint64_t empty_value() const noexcept { return empty_; }

 private:
  struct Cell {
    std::atomic<std::uint64_t> v;
  };
  static std::size_t round_up(std::size_t w) {
    constexpr std::size_t per_line = kCacheLine / sizeof(Cell);
    return (w + per_line - 1) / per_line * per_line;
  }

  int threads_;
  int width_;
  std::size_t stride_;
  std::uint64_t empty_;
  std::unique_ptr<Cell[]> cells_;
};

/// Per-thread array padded to cache lines.
template <class T>
class PerThread {
 public:
  explicit PerThread(int n) : n_(n), items_(std::make_unique<Padded[]>(static_cast<std::size_t>(n))) {}
  T& operator[](int tid) noexcept { return items_[static_cast<std::size_t>(tid)].value; }
  const T& operator[](int tid) const noexcept { return items_[static_cast<std::size_t>(tid)].value; }
  [[nodiscard]] int size() const noexcept { return n_; }

 private:
  struct alignas(kCacheLine) Padded {
    T value{};
  };
  int n_;
  std::unique_ptr<Padded[]> items_;
};

inline bool contains_sorted(const std::vector<std::uint64_t>& sorted, std::uint64_t v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

inline void sort_unique(std::vector<std::uint64_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

/// Expands to a checkpoint plus begin-read-phase for schemes that need phase
/// markers and to nothing otherwise. Must be used in the frame that runs the
/// read phase.
#define RECLAIM_BEGIN_READ_PHASE(smr, tid)                                      \
  do {                                                                          \
    if constexpr (std::remove_reference_t<decltype(smr)>::descriptor            \
                      .needs_phase_markers) {                                   \
      RECLAIM_CHECKPOINT((smr).checkpoint(tid));                                \
      (smr).begin_read(tid);                                                    \
    }                                                                           \
  } while (0)

}  // namespace reclaim
