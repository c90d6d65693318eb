// Neutralization-based reclamation and its watermark variant.
//
// Operations run a checkpointed read phase that a reclaimer may abort at any
// point with a signal, followed by a write phase that touches only the nodes
// reserved when the read phase ended.
#pragma once

#include <vector>

#include "reclaim/smr/base.hpp"

namespace reclaim {

/// True when `now` proves a whole broadcast (odd begin, even end) happened
/// after a timestamp snapshot of `snapshot`. Odd snapshots are rounded up so
/// a broadcast already in flight at snapshot time does not count.
constexpr bool nbrplus_event_completed(std::uint64_t snapshot, std::uint64_t now) noexcept {
  const std::uint64_t even = (snapshot + 1) & ~std::uint64_t{1};
  return now >= even + 2;
}

template <class Alloc, bool Plus>
class NbrImpl : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

  struct ThreadState {
    std::atomic<bool> restartable{false};
    Checkpoint checkpoint;
    std::vector<std::uint64_t> scratch;
    // watermark episode
    std::vector<std::uint64_t> scan_ts;
    std::size_t bookmark = 0;
    bool first_lowm_entry = true;
    std::size_t since_scan = 0;
  };

 public:
  static constexpr SchemeDescriptor descriptor{
      Plus ? SchemeKind::nbrplus : SchemeKind::nbr, false, true, true, true, false, 3};

  explicit NbrImpl(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt),
        rows_(rt.max_threads, cfg.nbr_max_reservations, 0),
        state_(rt.max_threads),
        announce_(rt.max_threads),
        lo_watermark_(static_cast<std::size_t>(static_cast<double>(cfg.nbr_hi_watermark) *
                                               cfg.nbr_lo_fraction)) {}

  ~NbrImpl() {
    for (int t = 0; t < state_.size(); ++t)
      if (detail::tls_restartable == &state_[t].restartable) detail::tls_restartable = nullptr;
  }

  int register_thread() {
    int tid = this->register_with(HandlerKind::nbr_neutralize);
    auto& st = state_[tid];
    this->runtime_.bind_neutralize(tid, &st.restartable, &st.checkpoint);
    detail::tls_restartable = &st.restartable;
    return tid;
  }

  Checkpoint& checkpoint(int tid) noexcept { return state_[tid].checkpoint; }

  void begin_read(int tid) noexcept {
    rows_.clear_row(tid, std::memory_order_relaxed);
    state_[tid].restartable.exchange(true, std::memory_order_seq_cst);
  }

  void end_read(int tid, std::initializer_list<const void*> reserved) {
    if (reserved.size() > static_cast<std::size_t>(rows_.width())) throw TooManyReservations();
    int slot = 0;
    for (const void* p : reserved)
      rows_.at(tid, slot++).store(node_address(p), std::memory_order_relaxed);
    for (; slot < rows_.width(); ++slot) rows_.at(tid, slot).store(0, std::memory_order_relaxed);
    // exchange orders the row writes before the flag becomes visible
    state_[tid].restartable.exchange(false, std::memory_order_seq_cst);
  }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p);
    auto& bag = this->bags_[tid];
    const std::size_t size = bag.size();
    if (size >= this->cfg_.nbr_hi_watermark) {
      neutralize_and_reclaim(tid);
    } else if constexpr (Plus) {
      if (size >= lo_watermark_) piggyback(tid);
    }
    bag.push(p);
  }

  /// Forced pass: broadcast and reclaim everything unreserved.
  void drain(int tid) { neutralize_and_reclaim(tid); }

  [[nodiscard]] SmrStats stats() const {
    SmrStats s = Base::stats();
    for (int t = 0; t < state_.size(); ++t) s.restarts += state_[t].checkpoint.restores;
    return s;
  }

  [[nodiscard]] bool restartable(int tid) const noexcept {
    return state_[tid].restartable.load();
  }
  [[nodiscard]] std::uint64_t reservation(int tid, int slot) const {
    return rows_.at(tid, slot).load();
  }
  [[nodiscard]] std::uint64_t announce_ts(int tid) const noexcept {
    return announce_[tid].load();
  }
  [[nodiscard]] std::size_t lo_watermark() const noexcept { return lo_watermark_; }
  [[nodiscard]] bool lowm_episode_open(int tid) const noexcept {
    return !state_[tid].first_lowm_entry;
  }

 private:
  void neutralize_and_reclaim(int tid) {
    auto& bag = this->bags_[tid];
    const std::size_t tail = bag.tail();
    if constexpr (Plus) {
      announce_[tid].fetch_add(1, std::memory_order_seq_cst);
      this->runtime_.broadcast_signal(tid);
      this->runtime_.post_broadcast_delay();
      announce_[tid].fetch_add(1, std::memory_order_seq_cst);
      state_[tid].first_lowm_entry = true;
    } else {
      this->runtime_.broadcast_signal(tid);
      this->runtime_.post_broadcast_delay();
    }
    reclaim_upto(tid, tail);
  }

  void piggyback(int tid) {
    auto& st = state_[tid];
    const int n = this->runtime_.registered_count();
    if (st.first_lowm_entry) {
      st.bookmark = this->bags_[tid].tail();
      st.scan_ts.resize(static_cast<std::size_t>(n));
      for (int t = 0; t < n; ++t)
        st.scan_ts[static_cast<std::size_t>(t)] = announce_[t].load(std::memory_order_seq_cst);
      st.first_lowm_entry = false;
      st.since_scan = 0;
      return;
    }
    if (++st.since_scan % this->cfg_.nbr_scan_amortization != 0) return;
    for (int t = 0; t < n && t < static_cast<int>(st.scan_ts.size()); ++t) {
      if (t == tid) continue;
      if (nbrplus_event_completed(st.scan_ts[static_cast<std::size_t>(t)],
                                  announce_[t].load(std::memory_order_seq_cst))) {
        reclaim_upto(tid, st.bookmark);
        st.first_lowm_entry = true;
        return;
      }
    }
  }

  std::size_t reclaim_upto(int tid, std::size_t tail) {
    std::atomic_thread_fence(std::memory_order_seq_cst);
    auto& reserved = state_[tid].scratch;
    reserved.clear();
    rows_.collect(this->runtime_.registered_count(), reserved);
    sort_unique(reserved);
    ThreadCounters::bump(this->counters_[tid].reclaim_passes);
    return this->bags_[tid].reclaim(
        tail, [&](void* p) { return contains_sorted(reserved, node_address(p)); },
        [&](void* p) { this->release(tid, p); });
  }

  ReservationTable rows_;
  PerThread<ThreadState> state_;
  PerThread<std::atomic<std::uint64_t>> announce_;
  std::size_t lo_watermark_;
};

template <class Alloc>
using Nbr = NbrImpl<Alloc, false>;
template <class Alloc>
using NbrPlus = NbrImpl<Alloc, true>;

}  // namespace reclaim
