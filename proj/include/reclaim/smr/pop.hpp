// Publish-on-ping: readers keep reservations in thread-private slots and only
// copy them to the shared table from the signal handler when a reclaimer asks.
#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "reclaim/smr/base.hpp"

namespace reclaim {

class PopCore {
 public:
  PopCore(int threads, int width, std::uint64_t empty)
      : local_(threads, width, empty), shared_(threads, width, empty),
        publish_counter_(threads), snapshot_(threads) {}

  PopCore(const PopCore&) = delete;
  PopCore& operator=(const PopCore&) = delete;

  void bind(Runtime& rt, int tid) { rt.bind_publish(tid, &on_ping, this); }

  std::atomic<std::uint64_t>& local(int tid, int slot) noexcept {
    return local_.at(tid, slot);
  }

  void clear_local(int tid) noexcept { local_.clear_row(tid, std::memory_order_relaxed); }

  /// Handler body: copy local slots to the shared row, then announce.
  void publish(int tid) noexcept {
    copy_row(tid);
    auto& c = publish_counter_[tid];
    c.store(c.load(std::memory_order_relaxed) + 1, std::memory_order_release);
  }

  /// Copies the caller's own slots without touching its counter.
  void copy_row(int tid) noexcept {
    for (int s = 0; s < local_.width(); ++s)
      shared_.at(tid, s).store(local_.at(tid, s).load(std::memory_order_relaxed),
                               std::memory_order_relaxed);
  }

  /// Snapshots publish counters, pings every peer and waits until each live
  /// peer has published at least once since the snapshot.
  void ping_and_wait(Runtime& rt, int from, ThreadCounters& counters) {
    const int n = rt.registered_count();
    auto& snap = snapshot_[from];
    snap.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
      snap[static_cast<std::size_t>(t)] = publish_counter_[t].load(std::memory_order_acquire);
    std::atomic_thread_fence(std::memory_order_seq_cst);
    rt.broadcast_signal(from);
    ThreadCounters::bump(counters.pings_sent);
    for (int t = 0; t < n; ++t) {
      if (t == from) continue;
      unsigned spins = 0;
      std::uint64_t rounds = 0;
      while (publish_counter_[t].load(std::memory_order_acquire) <=
             snap[static_cast<std::size_t>(t)]) {
        if (!rt.is_alive(t)) break;
        spin_pause(spins);
        if ((++rounds & 0xfff) == 0 && !rt.probe_alive(t)) break;
      }
    }
    copy_row(from);
    std::atomic_thread_fence(std::memory_order_seq_cst);
  }

  void collect(int rows, std::vector<std::uint64_t>& out) const { shared_.collect(rows, out); }

  [[nodiscard]] std::uint64_t publish_count(int tid) const noexcept {
    return publish_counter_[tid].load(std::memory_order_acquire);
  }
  [[nodiscard]] std::uint64_t shared_value(int tid, int slot) const noexcept {
    return shared_.at(tid, slot).load(std::memory_order_acquire);
  }

 private:
  static void on_ping(void* ctx, int tid) noexcept { static_cast<PopCore*>(ctx)->publish(tid); }

  ReservationTable local_;
  ReservationTable shared_;
  PerThread<std::atomic<std::uint64_t>> publish_counter_;
  PerThread<std::vector<std::uint64_t>> snapshot_;
};

/// Hazard pointers whose reads never issue a store-load fence.
template <class Alloc>
class HazardPointersPop : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

 public:
  static constexpr SchemeDescriptor descriptor{SchemeKind::pophp, true, false, true,
                                               false, false, 3};

  explicit HazardPointersPop(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt), pop_(rt.max_threads, cfg.max_hp, 0),
        scratch_(rt.max_threads) {}

  int register_thread() {
    int tid = this->register_with(HandlerKind::pop_publish);
    pop_.bind(this->runtime_, tid);
    return tid;
  }

  template <class Src>
  auto protect(int tid, const Src& src, int slot) {
    auto v = src.load(std::memory_order_acquire);
    auto& cell = pop_.local(tid, slot);
    for (;;) {
      cell.store(node_address(v), std::memory_order_relaxed);
      std::atomic_signal_fence(std::memory_order_seq_cst);
      auto again = src.load(std::memory_order_acquire);
      if (again == v) return v;
      v = again;
    }
  }

  void clear(int tid) noexcept { pop_.clear_local(tid); }
  void end_op(int tid) noexcept { clear(tid); }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p);
    auto& bag = this->bags_[tid];
    bag.push(p);
    if (bag.size() >= this->cfg_.pop_reclaim_freq) reclaim(tid);
  }

  std::size_t reclaim(int tid) {
    pop_.ping_and_wait(this->runtime_, tid, this->counters_[tid]);
    auto& reserved = scratch_[tid];
    reserved.clear();
    pop_.collect(this->runtime_.registered_count(), reserved);
    sort_unique(reserved);
    ThreadCounters::bump(this->counters_[tid].reclaim_passes);
    auto& bag = this->bags_[tid];
    return bag.reclaim(
        bag.tail(), [&](void* p) { return contains_sorted(reserved, node_address(p)); },
        [&](void* p) { this->release(tid, p); });
  }

  void drain(int tid) { reclaim(tid); }

  PopCore& core() noexcept { return pop_; }

 private:
  PopCore pop_;
  PerThread<std::vector<std::uint64_t>> scratch_;
};

/// Hazard eras with publish-on-ping reservations.
template <class Alloc>
class HazardErasPop : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

 public:
  static constexpr SchemeDescriptor descriptor{SchemeKind::pophe, true, false, true,
                                               false, true, 3};

  explicit HazardErasPop(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt), pop_(rt.max_threads, cfg.max_he, kEraNone),
        scratch_(rt.max_threads) {
    alloc.set_era_source(&epoch_);
  }

  ~HazardErasPop() { this->alloc_.set_era_source(nullptr); }

  int register_thread() {
    int tid = this->register_with(HandlerKind::pop_publish);
    pop_.bind(this->runtime_, tid);
    return tid;
  }

  template <class Src>
  auto protect(int tid, const Src& src, int slot) {
    auto& cell = pop_.local(tid, slot);
    std::uint64_t published = cell.load(std::memory_order_relaxed);
    for (;;) {
      auto v = src.load(std::memory_order_acquire);
      std::uint64_t era = epoch_.load(std::memory_order_acquire);
      if (era == published) return v;
      cell.store(era, std::memory_order_relaxed);
      std::atomic_signal_fence(std::memory_order_seq_cst);
      published = era;
    }
  }

  void clear(int tid) noexcept { pop_.clear_local(tid); }
  void end_op(int tid) noexcept { clear(tid); }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p, epoch_.load(std::memory_order_acquire));
    auto& bag = this->bags_[tid];
    bag.push(p);
    if (bag.size() >= this->cfg_.pop_reclaim_freq) {
      epoch_.fetch_add(1, std::memory_order_acq_rel);
      ThreadCounters::bump(this->counters_[tid].epoch_bumps);
      reclaim(tid);
    }
  }

  std::size_t reclaim(int tid) {
    pop_.ping_and_wait(this->runtime_, tid, this->counters_[tid]);
    auto& eras = scratch_[tid];
    eras.clear();
    pop_.collect(this->runtime_.registered_count(), eras);
    sort_unique(eras);
    ThreadCounters::bump(this->counters_[tid].reclaim_passes);
    auto& bag = this->bags_[tid];
    return bag.reclaim(
        bag.tail(),
        [&](void* p) {
          return !he_can_free_sorted(Alloc::birth_era(p), Alloc::retire_era(p), eras);
        },
        [&](void* p) { this->release(tid, p); });
  }

  void drain(int tid) { reclaim(tid); }

  [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_.load(); }
  void advance_epoch() noexcept { epoch_.fetch_add(1); }
  PopCore& core() noexcept { return pop_; }

 private:
  std::atomic<std::uint64_t> epoch_{1};
  PopCore pop_;
  PerThread<std::vector<std::uint64_t>> scratch_;
};

/// EBR on the fast path; when a pass leaves the bag above C thresholds the
/// reclaimer pings everyone and falls back to a hazard-pointer scan.
template <class Alloc>
class EpochPop : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

 public:
  static constexpr SchemeDescriptor descriptor{SchemeKind::epochpop, true, false, true,
                                               false, false, 3};

  explicit EpochPop(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt), reserved_(rt.max_threads), op_count_(rt.max_threads),
        pop_(rt.max_threads, cfg.max_hp, 0), scratch_(rt.max_threads) {
    for (int t = 0; t < rt.max_threads; ++t)
      reserved_[t].store(kEpochQuiescent, std::memory_order_relaxed);
  }

  int register_thread() {
    int tid = this->register_with(HandlerKind::pop_publish);
    pop_.bind(this->runtime_, tid);
    return tid;
  }

  void start_op(int tid) {
    if (++op_count_[tid] % this->cfg_.epoch_freq == 0) {
      epoch_.fetch_add(1, std::memory_order_acq_rel);
      ThreadCounters::bump(this->counters_[tid].epoch_bumps);
    }
    reserved_[tid].store(epoch_.load(std::memory_order_acquire),
                         std::memory_order_seq_cst);
  }

  void end_op(int tid) {
    reserved_[tid].store(kEpochQuiescent, std::memory_order_release);
    pop_.clear_local(tid);
  }

  template <class Src>
  auto protect(int tid, const Src& src, int slot) {
    auto v = src.load(std::memory_order_acquire);
    auto& cell = pop_.local(tid, slot);
    for (;;) {
      cell.store(node_address(v), std::memory_order_relaxed);
      std::atomic_signal_fence(std::memory_order_seq_cst);
      auto again = src.load(std::memory_order_acquire);
      if (again == v) return v;
      v = again;
    }
  }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p, epoch_.load(std::memory_order_acquire));
    auto& bag = this->bags_[tid];
    bag.push(p);
    const std::size_t freq = this->cfg_.reclaim_freq;
    if (bag.size() % freq != 0) return;
    reclaim_epochs(tid);
    if (fallback_due(bag.size())) reclaim_hazards(tid);
  }

  std::size_t reclaim_epochs(int tid) {
    std::atomic_thread_fence(std::memory_order_seq_cst);
    std::uint64_t min_reserved = kEpochQuiescent;
    const int n = this->runtime_.registered_count();
    for (int t = 0; t < n; ++t)
      min_reserved = std::min(min_reserved, reserved_[t].load(std::memory_order_acquire));
    ThreadCounters::bump(this->counters_[tid].reclaim_passes);
    return this->bags_[tid].reclaim_prefix(
        [&](void* p) { return Alloc::retire_era(p) < min_reserved; },
        [&](void* p) { this->release(tid, p); });
  }

  std::size_t reclaim_hazards(int tid) {
    ThreadCounters::bump(this->counters_[tid].slow_path_triggers);
    pop_.ping_and_wait(this->runtime_, tid, this->counters_[tid]);
    auto& reserved = scratch_[tid];
    reserved.clear();
    pop_.collect(this->runtime_.registered_count(), reserved);
    sort_unique(reserved);
    auto& bag = this->bags_[tid];
    return bag.reclaim(
        bag.tail(), [&](void* p) { return contains_sorted(reserved, node_address(p)); },
        [&](void* p) { this->release(tid, p); });
  }

  void drain(int tid) { reclaim_epochs(tid); }

  [[nodiscard]] bool fallback_due(std::size_t bag_size) const noexcept {
    const std::size_t c = this->cfg_.epochpop_C;
    if (c == std::numeric_limits<std::size_t>::max()) return false;
    const std::size_t freq = this->cfg_.reclaim_freq;
    if (c > std::numeric_limits<std::size_t>::max() / freq) return false;
    return bag_size >= c * freq;
  }

  [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_.load(); }
  PopCore& core() noexcept { return pop_; }

 private:
  std::atomic<std::uint64_t> epoch_{0};
  PerThread<std::atomic<std::uint64_t>> reserved_;
  PerThread<std::uint64_t> op_count_;
  PopCore pop_;
  PerThread<std::vector<std::uint64_t>> scratch_;
};

}  // namespace reclaim
