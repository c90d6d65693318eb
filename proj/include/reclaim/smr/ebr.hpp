// Epoch-based reclamation: operations reserve the global epoch on entry and
// drop the reservation on exit; a retired node is freed once every reserved
// epoch is newer than the node's retire epoch.
#pragma once

#include <algorithm>

#include "reclaim/smr/base.hpp"

namespace reclaim {

template <class Alloc>
class Ebr : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

 public:
  static constexpr SchemeDescriptor descriptor{SchemeKind::ebr, false, false, true,
                                               false, false, 0};

  explicit Ebr(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt), reserved_(rt.max_threads), op_count_(rt.max_threads) {
    for (int t = 0; t < rt.max_threads; ++t)
      reserved_[t].store(kEpochQuiescent, std::memory_order_relaxed);
  }

  int register_thread() { return this->register_with(HandlerKind::none); }

  void start_op(int tid) {
    if (++op_count_[tid] % this->cfg_.epoch_freq == 0) {
      epoch_.fetch_add(1, std::memory_order_acq_rel);
      ThreadCounters::bump(this->counters_[tid].epoch_bumps);
    }
    reserved_[tid].store(epoch_.load(std::memory_order_acquire),
                         std::memory_order_seq_cst);
  }

  void end_op(int tid) { reserved_[tid].store(kEpochQuiescent, std::memory_order_release); }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p, epoch_.load(std::memory_order_acquire));
    auto& bag = this->bags_[tid];
    bag.push(p);
    if (bag.size() % this->cfg_.reclaim_freq == 0) reclaim(tid);
  }

  /// Frees every bag entry retired strictly before the oldest reserved epoch.
  /// Retire epochs are non-decreasing along a bag, so the freeable entries
  /// form a prefix.
  std::size_t reclaim(int tid) {
    std::atomic_thread_fence(std::memory_order_seq_cst);
    const std::uint64_t min_reserved = min_reserved_epoch();
    ThreadCounters::bump(this->counters_[tid].reclaim_passes);
    return this->bags_[tid].reclaim_prefix(
        [&](void* p) { return Alloc::retire_era(p) < min_reserved; },
        [&](void* p) { this->release(tid, p); });
  }

  void drain(int tid) { reclaim(tid); }

  [[nodiscard]] std::uint64_t min_reserved_epoch() const {
    std::uint64_t m = kEpochQuiescent;
    const int n = this->runtime_.registered_count();
    for (int t = 0; t < n; ++t)
      m = std::min(m, reserved_[t].load(std::memory_order_acquire));
    return m;
  }

  [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_.load(); }
  [[nodiscard]] std::uint64_t reserved_epoch(int tid) const noexcept {
    return reserved_[tid].load();
  }

 private:
  std::atomic<std::uint64_t> epoch_{0};
  PerThread<std::atomic<std::uint64_t>> reserved_;
  PerThread<std::uint64_t> op_count_;
};

}  // namespace reclaim
