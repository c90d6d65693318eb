// Shared plumbing for scheme implementations. Each scheme derives from
// SchemeBase and hides the hooks it actually needs; the defaults here are the
// no-op versions.
#pragma once

#include <atomic>
#include <cstdint>
#include <initializer_list>
#include <utility>

#include "reclaim/smr/common.hpp"

namespace reclaim {

template <class Alloc>
class SchemeBase {
 public:
  using allocator_type = Alloc;

  SchemeBase(Alloc& alloc, const SmrConfig& cfg, RuntimeConfig rt)
      : alloc_(alloc), cfg_(cfg), runtime_(rt), counters_(rt.max_threads),
        bags_(rt.max_threads) {}

  SchemeBase(const SchemeBase&) = delete;
  SchemeBase& operator=(const SchemeBase&) = delete;

  ~SchemeBase() {
    for (int t = 0; t < bags_.size(); ++t)
      bags_[t].release_all([this](void* p) { alloc_.free_node(p); });
  }

  void start_op(int) noexcept {}
  void end_op(int) noexcept {}
  void begin_read(int) noexcept {}
  void end_read(int, std::initializer_list<const void*>) noexcept {}

  template <class Src>
  auto protect(int, const Src& src, int) const noexcept {
    return src.load(std::memory_order_acquire);
  }

  template <class T, class... Args>
  T* create(int, Args&&... args) {
    return alloc_.template create<T>(std::forward<Args>(args)...);
  }

  Alloc& alloc() noexcept { return alloc_; }
  Runtime& runtime() noexcept { return runtime_; }
  const SmrConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] int max_threads() const noexcept { return runtime_.max_threads(); }

  [[nodiscard]] std::size_t bag_size(int tid) const noexcept { return bags_[tid].size(); }

  [[nodiscard]] SmrStats stats() const {
    SmrStats s;
    for (int t = 0; t < counters_.size(); ++t) accumulate(s, counters_[t]);
    s.signals_sent = runtime_.stats().signals_sent.load(std::memory_order_relaxed);
    return s;
  }

  ThreadCounters& counters(int tid) noexcept { return counters_[tid]; }

 protected:
  int register_with(HandlerKind kind) { return runtime_.register_thread(kind); }

  void release(int tid, void* p) {
    alloc_.free_node(p);
    ThreadCounters::bump(counters_[tid].freed);
  }

  Alloc& alloc_;
  SmrConfig cfg_;
  Runtime runtime_;
  PerThread<ThreadCounters> counters_;
  PerThread<LimboBag> bags_;
};

}  // namespace reclaim
