// Hazard pointers. Every protected read publishes the handle with a
// store-load ordering point before the source is re-checked.
#pragma once

#include <vector>

#include "reclaim/smr/base.hpp"

namespace reclaim {

template <class Alloc>
class HazardPointers : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

 public:
  static constexpr SchemeDescriptor descriptor{SchemeKind::hp, true, false, true,
                                               false, false, 3};

  explicit HazardPointers(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt), slots_(rt.max_threads, cfg.max_hp, 0),
        scratch_(rt.max_threads) {}

  int register_thread() { return this->register_with(HandlerKind::none); }

  template <class Src>
  auto protect(int tid, const Src& src, int slot) {
    auto v = src.load(std::memory_order_acquire);
    auto& cell = slots_.at(tid, slot);
    auto& fences = this->counters_[tid].fences_on_read_path;
    for (;;) {
      // exchange gives the store-load ordering without a separate fence
      cell.exchange(node_address(v), std::memory_order_seq_cst);
      ThreadCounters::bump(fences);
      auto again = src.load(std::memory_order_acquire);
      if (again == v) return v;
      v = again;
    }
  }

  void clear(int tid) { slots_.clear_row(tid); }
  void end_op(int tid) { clear(tid); }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p);
    auto& bag = this->bags_[tid];
    bag.push(p);
    if (bag.size() >= this->cfg_.reclaim_freq) reclaim(tid);
  }

  /// Frees every bag entry not present in the current reservation snapshot.
  std::size_t reclaim(int tid) {
    std::atomic_thread_fence(std::memory_order_seq_cst);
    auto& reserved = scratch_[tid];
    reserved.clear();
    slots_.collect(this->runtime_.registered_count(), reserved);
    sort_unique(reserved);
    ThreadCounters::bump(this->counters_[tid].reclaim_passes);
    auto& bag = this->bags_[tid];
    return bag.reclaim(
        bag.tail(), [&](void* p) { return contains_sorted(reserved, node_address(p)); },
        [&](void* p) { this->release(tid, p); });
  }

  void drain(int tid) { reclaim(tid); }

  [[nodiscard]] std::uint64_t slot_value(int tid, int slot) const {
    return slots_.at(tid, slot).load();
  }

 private:
  ReservationTable slots_;
  PerThread<std::vector<std::uint64_t>> scratch_;
};

}  // namespace reclaim
