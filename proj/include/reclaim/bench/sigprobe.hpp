// Signal delivery latency probe: one thread sends directed signals to another
// and both the send call and the send-to-handler-entry time are recorded.
#pragma once

#include <pthread.h>
#include <sched.h>
#include <time.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "reclaim/runtime.hpp"

namespace reclaim::bench {

struct LatencySummary {
  double min = 0;
  double median = 0;
  double p99 = 0;
};

struct SigprobeResult {
  std::size_t samples = 0;
  bool pinned = false;
  std::string warning;
  double cycles_per_ns = 0;
  LatencySummary send_ns;
  LatencySummary latency_ns;
  LatencySummary send_cycles;
  LatencySummary latency_cycles;
};

class PinningUnsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::int64_t mono_ns() noexcept {
  timespec ts;
  ::clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1000000000 + ts.tv_nsec;
}

/// Nearest-rank percentile of an unsorted sample.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

inline LatencySummary summarize(const std::vector<double>& v) {
  return {*std::min_element(v.begin(), v.end()), percentile(v, 50), percentile(v, 99)};
}

inline LatencySummary scale(LatencySummary s, double k) {
  return {s.min * k, s.median * k, s.p99 * k};
}

/// TSC ticks per nanosecond measured against the monotonic clock; 0 where no
/// cycle counter is available.
inline double calibrate_cycles_per_ns() {
#if defined(__x86_64__) || defined(__i386__)
  const std::int64_t t0 = mono_ns();
  const std::uint64_t c0 = __builtin_ia32_rdtsc();
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  const std::int64_t t1 = mono_ns();
  const std::uint64_t c1 = __builtin_ia32_rdtsc();
  if (t1 <= t0) return 0;
  return static_cast<double>(c1 - c0) / static_cast<double>(t1 - t0);
#else
  return 0;
#endif
}

/// Two distinct CPUs from the current affinity mask.
inline void pick_cpus(int& a, int& b) {
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(0, sizeof set, &set) != 0)
    throw PinningUnsupported("cannot read CPU affinity");
  a = b = -1;
  for (int c = 0; c < CPU_SETSIZE; ++c) {
    if (!CPU_ISSET(c, &set)) continue;
    if (a < 0) {
      a = c;
    } else {
      b = c;
      return;
    }
  }
  throw PinningUnsupported("fewer than two CPUs available");
}

inline bool pin(pthread_t t, int cpu) {
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  return pthread_setaffinity_np(t, sizeof set, &set) == 0;
}

struct ProbeTarget {
  std::atomic<std::int64_t> handler_ns{0};
  std::atomic<std::uint64_t> entries{0};
  static void on_signal(void* ctx, int) noexcept {
    auto* self = static_cast<ProbeTarget*>(ctx);
    self->handler_ns.store(mono_ns(), std::memory_order_relaxed);
    self->entries.fetch_add(1, std::memory_order_release);
  }
};

}  // namespace detail

/// Sends `samples` signals and summarizes the timings. With fewer than two
/// CPUs the threads run unpinned and `warning` says so.
inline SigprobeResult sigprobe(std::size_t samples, int signum = 0) {
  if (samples == 0) throw std::invalid_argument("sigprobe needs at least one sample");

  SigprobeResult result;
  result.samples = samples;
  int cpu_a = -1;
  int cpu_b = -1;
  try {
    detail::pick_cpus(cpu_a, cpu_b);
  } catch (const PinningUnsupported& e) {
    result.warning = std::string("pinning unsupported (") + e.what() + "); running unpinned";
  }

  RuntimeConfig rc;
  rc.max_threads = 1;
  rc.signum = signum;
  Runtime rt(rc);
  detail::ProbeTarget target;
  std::atomic<bool> ready{false};
  std::atomic<bool> done{false};

  std::thread receiver([&] {
    int tid = rt.register_thread(HandlerKind::pop_publish);
    rt.bind_publish(tid, &detail::ProbeTarget::on_signal, &target);
    ready.store(true, std::memory_order_release);
    // a timed sleep rather than pause() so a wakeup racing with `done` is not lost
    while (!done.load(std::memory_order_acquire)) {
      timespec ts{0, 10000000};
      ::nanosleep(&ts, nullptr);
    }
  });
  while (!ready.load(std::memory_order_acquire)) std::this_thread::yield();

  cpu_set_t saved;
  CPU_ZERO(&saved);
  const bool have_saved = sched_getaffinity(0, sizeof saved, &saved) == 0;
  if (cpu_a >= 0) {
    result.pinned = detail::pin(pthread_self(), cpu_a) && detail::pin(receiver.native_handle(), cpu_b);
    if (!result.pinned) result.warning = "pinning failed; running unpinned";
  }

  std::vector<double> send_ns;
  std::vector<double> latency_ns;
  send_ns.reserve(samples);
  latency_ns.reserve(samples);
  // let the receiver settle into its sleep
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  for (std::size_t i = 0; i < samples; ++i) {
    const std::uint64_t before = target.entries.load(std::memory_order_acquire);
    const std::int64_t t0 = detail::mono_ns();
    rt.send_signal(0);
    const std::int64_t t1 = detail::mono_ns();
    unsigned spins = 0;
    while (target.entries.load(std::memory_order_acquire) == before) spin_pause(spins);
    const std::int64_t th = target.handler_ns.load(std::memory_order_relaxed);
    send_ns.push_back(static_cast<double>(t1 - t0));
    latency_ns.push_back(static_cast<double>(th - t0));
  }

  done.store(true, std::memory_order_release);
  rt.send_signal(0);
  receiver.join();
  if (have_saved) sched_setaffinity(0, sizeof saved, &saved);

  result.send_ns = detail::summarize(send_ns);
  result.latency_ns = detail::summarize(latency_ns);
  result.cycles_per_ns = detail::calibrate_cycles_per_ns();
  result.send_cycles = detail::scale(result.send_ns, result.cycles_per_ns);
  result.latency_cycles = detail::scale(result.latency_ns, result.cycles_per_ns);
  return result;
}

}  // namespace reclaim::bench
