// Allocation facade used by every structure and scheme.
//
// release:  nodes go back to malloc on free.
// validate: freed nodes are poisoned and parked in a bounded quarantine ring
//           so that later reads through a stale handle are detected instead of
//           silently reading reused memory.
#pragma once

#include <unistd.h>

#include <atomic>
#include <cassert>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace reclaim {

enum class AllocMode { release, validate };

inline constexpr std::string_view to_string(AllocMode m) {
  return m == AllocMode::release ? "release" : "validate";
}

inline AllocMode parse_alloc_mode(std::string_view s) {
  if (s == "release") return AllocMode::release;
  if (s == "validate") return AllocMode::validate;
  throw std::invalid_argument("unknown alloc mode: " + std::string(s));
}

/// Mode named by RECLAIM_ALLOC_MODE, or `fallback` when unset.
inline AllocMode alloc_mode_from_env(AllocMode fallback = AllocMode::release) {
  const char* env = std::getenv("RECLAIM_ALLOC_MODE");
  if (env == nullptr || *env == '\0') return fallback;
  return parse_alloc_mode(env);
}

inline constexpr std::uint64_t kAlivePattern = 0xA11CE5A11FE0F00DULL;
inline constexpr std::uint64_t kPoisonPattern = 0xDEADBEEFDEADBEEFULL;

struct NodeHeader {
  std::atomic<std::uint64_t> canary;
  std::uint64_t birth_era;
  std::uint64_t retire_era;
  std::uint32_t payload_size;
  std::atomic<std::uint32_t> flags;

  static constexpr std::uint32_t kRetired = 1;
};
static_assert(sizeof(NodeHeader) == 32, "payload must stay 16-byte aligned");

inline NodeHeader* header_of(const void* payload) noexcept {
  return reinterpret_cast<NodeHeader*>(
      const_cast<char*>(static_cast<const char*>(payload)) - sizeof(NodeHeader));
}

struct AllocStats {
  std::uint64_t live_bytes = 0;
  std::uint64_t peak_live_bytes = 0;
  std::uint64_t allocations = 0;
  std::uint64_t frees = 0;
  std::uint64_t retired_nodes = 0;
  std::uint64_t peak_retired_nodes = 0;
};

struct Violations {
  std::uint64_t poison_access = 0;
  std::uint64_t double_free = 0;
  std::uint64_t double_retire = 0;
  [[nodiscard]] std::uint64_t total() const noexcept {
    return poison_access + double_free + double_retire;
  }
};

namespace detail {

/// Set by restart-capable schemes so the allocator can reject allocation
/// inside a read phase in debug builds.
inline thread_local const std::atomic<bool>* tls_restartable = nullptr;

inline void peak_update(std::atomic<std::uint64_t>& peak, std::uint64_t v) noexcept {
  std::uint64_t cur = peak.load(std::memory_order_relaxed);
  while (cur < v &&
         !peak.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

inline void assert_not_in_read_phase() noexcept {
#ifndef NDEBUG
  const std::atomic<bool>* r = tls_restartable;
  assert((r == nullptr || !r->load(std::memory_order_relaxed)) &&
         "allocation or free inside a restartable read phase");
#endif
}

}  // namespace detail

template <AllocMode Mode>
class GuardAlloc {
 public:
  static constexpr AllocMode mode = Mode;
  static constexpr std::size_t kDefaultQuarantine = std::size_t{1} << 20;

  explicit GuardAlloc(std::size_t quarantine_capacity = kDefaultQuarantine)
      : quarantine_capacity_(quarantine_capacity == 0 ? 1 : quarantine_capacity) {}

  GuardAlloc(const GuardAlloc&) = delete;
  GuardAlloc& operator=(const GuardAlloc&) = delete;

  ~GuardAlloc() {
    for (void* raw : quarantine_) std::free(raw);
  }

  /// Birth eras are stamped from this counter when set (era-based schemes).
  void set_era_source(const std::atomic<std::uint64_t>* era) noexcept {
    era_source_ = era;
  }

  /// Label included in the first violation message.
  void set_context(std::string label) { context_ = std::move(label); }

  void* alloc_node(std::size_t payload_size) {
    detail::assert_not_in_read_phase();
    const std::size_t total = sizeof(NodeHeader) + payload_size;
    void* raw = std::malloc(total);
    if (raw == nullptr) throw std::bad_alloc();
    auto* h = static_cast<NodeHeader*>(raw);
    new (&h->canary) std::atomic<std::uint64_t>(kAlivePattern);
    h->birth_era =
        era_source_ != nullptr ? era_source_->load(std::memory_order_acquire) : 0;
    h->retire_era = 0;
    h->payload_size = static_cast<std::uint32_t>(payload_size);
    new (&h->flags) std::atomic<std::uint32_t>(0);
    allocations_.fetch_add(1, std::memory_order_relaxed);
    auto live = live_bytes_.fetch_add(total, std::memory_order_relaxed) + total;
    detail::peak_update(peak_live_bytes_, live);
    return static_cast<char*>(raw) + sizeof(NodeHeader);
  }

  template <class T, class... Args>
  T* create(Args&&... args) {
    static_assert(std::is_trivially_destructible_v<T>,
                  "nodes are released without running destructors");
    static_assert(alignof(T) <= 16);
    void* p = alloc_node(sizeof(T));
    return new (p) T(std::forward<Args>(args)...);
  }

  void free_node(void* payload) {
    detail::assert_not_in_read_phase();
    if (payload == nullptr) return;
    NodeHeader* h = header_of(payload);
    const std::size_t total = sizeof(NodeHeader) + h->payload_size;
    if constexpr (Mode == AllocMode::validate) {
      std::uint64_t expect = kAlivePattern;
      if (!h->canary.compare_exchange_strong(expect, kPoisonPattern,
                                             std::memory_order_acq_rel)) {
        record(double_free_, "double free", payload);
        return;
      }
    }
    if (h->flags.load(std::memory_order_relaxed) & NodeHeader::kRetired)
      retired_nodes_.fetch_sub(1, std::memory_order_relaxed);
    frees_.fetch_add(1, std::memory_order_relaxed);
    live_bytes_.fetch_sub(total, std::memory_order_relaxed);
    if constexpr (Mode == AllocMode::validate) {
      quarantine(h);
    } else {
      std::free(h);
    }
  }

  /// Marks a node as handed to the reclamation layer; must happen exactly once.
  void note_retire(void* payload, std::uint64_t retire_era = 0) {
    NodeHeader* h = header_of(payload);
    h->retire_era = retire_era;
    std::uint32_t prev =
        h->flags.fetch_or(NodeHeader::kRetired, std::memory_order_relaxed);
    if (prev & NodeHeader::kRetired) {
      record(double_retire_, "double retire", payload);
      return;
    }
    auto n = retired_nodes_.fetch_add(1, std::memory_order_relaxed) + 1;
    detail::peak_update(peak_retired_nodes_, n);
  }

  /// Checks that a handle is still live; no-op in release mode.
  void assert_live(const void* payload) {
    if constexpr (Mode == AllocMode::validate) {
      if (header_of(payload)->canary.load(std::memory_order_relaxed) !=
          kAlivePattern)
        record(poison_access_, "poison access", payload);
    } else {
      (void)payload;
    }
  }

  /// Loads a 64-bit word at `offset` bytes into the payload.
  std::uint64_t checked_read(const void* payload, std::size_t offset) {
    assert_live(payload);
    std::uint64_t v;
    std::memcpy(&v, static_cast<const char*>(payload) + offset, sizeof v);
    return v;
  }

  [[nodiscard]] static std::uint64_t birth_era(const void* payload) noexcept {
    return header_of(payload)->birth_era;
  }
  [[nodiscard]] static std::uint64_t retire_era(const void* payload) noexcept {
    return header_of(payload)->retire_era;
  }

  [[nodiscard]] AllocStats stats() const noexcept {
    AllocStats s;
    s.live_bytes = live_bytes_.load(std::memory_order_relaxed);
    s.peak_live_bytes = peak_live_bytes_.load(std::memory_order_relaxed);
    s.allocations = allocations_.load(std::memory_order_relaxed);
    s.frees = frees_.load(std::memory_order_relaxed);
    s.retired_nodes = retired_nodes_.load(std::memory_order_relaxed);
    s.peak_retired_nodes = peak_retired_nodes_.load(std::memory_order_relaxed);
    return s;
  }

  [[nodiscard]] Violations violations() const noexcept {
    return {poison_access_.load(std::memory_order_relaxed),
            double_free_.load(std::memory_order_relaxed),
            double_retire_.load(std::memory_order_relaxed)};
  }

  /// Set once any violation is recorded; running trials poll it and stop.
  [[nodiscard]] bool aborted() const noexcept {
    return aborted_.load(std::memory_order_relaxed);
  }

  [[nodiscard]] std::string first_violation() const {
    if (!message_ready_.load(std::memory_order_acquire)) return {};
    return std::string(message_);
  }

  /// Restarts the peak gauges from the current values (e.g. after prefill).
  void reset_peaks() noexcept {
    peak_live_bytes_.store(live_bytes_.load(std::memory_order_relaxed),
                           std::memory_order_relaxed);
    peak_retired_nodes_.store(retired_nodes_.load(std::memory_order_relaxed),
                              std::memory_order_relaxed);
  }

  void dump_stats(std::ostream& os) const {
    AllocStats s = stats();
    Violations v = violations();
    os << "mode=" << to_string(Mode) << '\n'
       << "live_bytes=" << s.live_bytes << '\n'
       << "peak_live_bytes=" << s.peak_live_bytes << '\n'
       << "allocations=" << s.allocations << '\n'
       << "frees=" << s.frees << '\n'
       << "retired_nodes=" << s.retired_nodes << '\n'
       << "peak_retired_nodes=" << s.peak_retired_nodes << '\n'
       << "poison_access=" << v.poison_access << '\n'
       << "double_free=" << v.double_free << '\n'
       << "double_retire=" << v.double_retire << '\n';
  }

 private:
  void quarantine(NodeHeader* h) {
    void* evicted = nullptr;
    {
      std::lock_guard lock(quarantine_mu_);
      if (quarantine_.size() < quarantine_capacity_) {
        quarantine_.push_back(h);
      } else {
        evicted = quarantine_[quarantine_head_];
        quarantine_[quarantine_head_] = h;
        quarantine_head_ = (quarantine_head_ + 1) % quarantine_capacity_;
      }
    }
    std::free(evicted);
  }

  // Lock-free so that it can run in a read phase that may be interrupted.
  void record(std::atomic<std::uint64_t>& counter, const char* what,
              const void* node) noexcept {
    counter.fetch_add(1, std::memory_order_relaxed);
    aborted_.store(true, std::memory_order_relaxed);
    bool expected = false;
    if (message_claimed_.compare_exchange_strong(expected, true)) {
      std::snprintf(message_, sizeof message_, "%s on node %p (os thread %ld%s%s)",
                    what, node, static_cast<long>(::gettid()),
                    context_.empty() ? "" : ", ", context_.c_str());
      message_ready_.store(true, std::memory_order_release);
    }
  }

  const std::atomic<std::uint64_t>* era_source_ = nullptr;
  std::string context_;

  std::atomic<std::uint64_t> live_bytes_{0};
  std::atomic<std::uint64_t> peak_live_bytes_{0};
  std::atomic<std::uint64_t> allocations_{0};
  std::atomic<std::uint64_t> frees_{0};
  std::atomic<std::uint64_t> retired_nodes_{0};
  std::atomic<std::uint64_t> peak_retired_nodes_{0};

  std::atomic<std::uint64_t> poison_access_{0};
  std::atomic<std::uint64_t> double_free_{0};
  std::atomic<std::uint64_t> double_retire_{0};
  std::atomic<bool> aborted_{false};
  std::atomic<bool> message_claimed_{false};
  std::atomic<bool> message_ready_{false};
  char message_[256] = {};

  std::size_t quarantine_capacity_;
  std::mutex quarantine_mu_;
  std::vector<void*> quarantine_;
  std::size_t quarantine_head_ = 0;
};

}  // namespace reclaim
