// Baseline that never reclaims during a run; retired nodes are freed when the
// scheme is destroyed.
#pragma once

#include "reclaim/smr/base.hpp"

namespace reclaim {

template <class Alloc>
class Leaky : public SchemeBase<Alloc> {
  using Base = SchemeBase<Alloc>;

 public:
  static constexpr SchemeDescriptor descriptor{SchemeKind::none, false, false, false,
                                               false, false, 0};

  explicit Leaky(Alloc& alloc, const SmrConfig& cfg = {}, RuntimeConfig rt = {})
      : Base(alloc, cfg, rt) {}

  int register_thread() { return this->register_with(HandlerKind::none); }

  void retire(int tid, void* p) {
    this->alloc_.note_retire(p);
    this->bags_[tid].push(p);
  }

  void drain(int) noexcept {}
};

}  // namespace reclaim
