// Hazard eras. Readers reserve the current global era instead of a handle and
// republish only when the era moved; a node may be freed when no reserved era
// falls inside its lifetime.
#pragma once

#include <vector>

#include "reclaim/smr/base.hpp"

namespace reclaim {

template <class Alloc>
class HazardEras : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

 public:
  static constexpr SchemeDescriptor descriptor{SchemeKind::he, true, false, true,
                                               false, true, 3};

  explicit HazardEras(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt), slots_(rt.max_threads, cfg.max_he, kEraNone),
        scratch_(rt.max_threads) {
    alloc.set_era_source(&epoch_);
  }

  ~HazardEras() { this->alloc_.set_era_source(nullptr); }

  int register_thread() { return this->register_with(HandlerKind::none); }

  template <class Src>
  auto protect(int tid, const Src& src, int slot) {
    auto& cell = slots_.at(tid, slot);
    std::uint64_t published = cell.load(std::memory_order_relaxed);
    for (;;) {
      auto v = src.load(std::memory_order_acquire);
      std::uint64_t era = epoch_.load(std::memory_order_acquire);
      if (era == published) return v;
      cell.exchange(era, std::memory_order_seq_cst);
      ThreadCounters::bump(this->counters_[tid].fences_on_read_path);
      published = era;
    }
  }

  void clear(int tid) { slots_.clear_row(tid); }
  void end_op(int tid) { clear(tid); }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p, epoch_.load(std::memory_order_acquire));
    auto& bag = this->bags_[tid];
    bag.push(p);
    if (bag.size() >= this->cfg_.reclaim_freq) {
      epoch_.fetch_add(1, std::memory_order_acq_rel);
      ThreadCounters::bump(this->counters_[tid].epoch_bumps);
      reclaim(tid);
    }
  }

  std::size_t reclaim(int tid) {
    std::atomic_thread_fence(std::memory_order_seq_cst);
    auto& eras = scratch_[tid];
    eras.clear();
    slots_.collect(this->runtime_.registered_count(), eras);
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
  [[nodiscard]] std::uint64_t slot_value(int tid, int slot) const {
    return slots_.at(tid, slot).load();
  }

 private:
  std::atomic<std::uint64_t> epoch_{1};
  ReservationTable slots_;
  PerThread<std::vector<std::uint64_t>> scratch_;
};

}  // namespace reclaim
