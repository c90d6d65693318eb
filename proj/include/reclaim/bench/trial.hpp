// One timed benchmark trial: prefill, timed mixed workload, optional stalled
// thread, per-thread drain, and the counters that make up a CSV row.
#pragma once

#include <time.h>

#include <atomic>
#include <barrier>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "reclaim/bench/workload.hpp"
#include "reclaim/ds/all.hpp"
#include "reclaim/smr/all.hpp"

namespace reclaim::bench {

enum class Stall { none, one };

inline std::string_view to_string(Stall s) { return s == Stall::none ? "none" : "one"; }

inline Stall parse_stall(std::string_view s) {
  if (s == "none") return Stall::none;
  if (s == "one") return Stall::one;
  throw std::invalid_argument("stall must be none or one");
}

struct TrialConfig {
  DsKind structure = DsKind::hm_list;
  SchemeKind scheme = SchemeKind::ebr;
  int threads = 1;
  double duration = 2.0;  // seconds
  std::uint64_t key_range = 2000;
  Workload workload{};
  int trials = 1;
  double prefill = 0.5;
  Stall stall = Stall::none;
  AllocMode alloc_mode = AllocMode::release;
  std::uint64_t seed = 1;

  // Not part of the CSV row.
  SmrConfig smr{};
  DsConfig ds{};
  PairingOptions pairing{};
  std::chrono::nanoseconds post_broadcast_delay{1000};
  /// The timed phase stops early if live node bytes exceed this.
  std::uint64_t memory_cap_bytes = std::uint64_t{2} << 30;
};

struct TrialRecord {
  TrialConfig config;
  std::uint64_t ops_total = 0;
  double throughput_ops_per_s = 0;
  std::uint64_t peak_live_bytes = 0;
  std::uint64_t peak_retired_nodes = 0;
  std::uint64_t signals_sent = 0;
  std::uint64_t restarts = 0;
  std::uint64_t fences_on_read_path = 0;
  std::uint64_t slow_path_triggers = 0;
  std::uint64_t violations = 0;

  // Diagnostics, not written to CSV.
  double elapsed_s = 0;
  bool hit_memory_cap = false;
  std::string first_violation;
};

/// Validates percentages, thread count and pairing.
inline void validate(const TrialConfig& c) {
  if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (c.duration < 0) throw std::invalid_argument("duration must be >= 0");
  if (c.key_range < 1) throw std::invalid_argument("key_range must be >= 1");
  if (c.key_range > kMaxKey) throw std::invalid_argument("key_range too large");
  if (c.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (c.prefill < 0 || c.prefill > 1) throw std::invalid_argument("prefill must be in [0,1]");
  const Workload& w = c.workload;
  if (w.insert < 0 || w.remove < 0 || w.contains < 0 ||
      w.insert + w.remove + w.contains != 100)
    throw std::invalid_argument("workload percentages must sum to 100");
  require_pairing(c.structure, c.scheme, c.pairing);
}

namespace detail {

/// Sleeps until `deadline` or until `stop` is raised, in short slices.
inline void sleep_until(std::chrono::steady_clock::time_point deadline,
                        const std::atomic<bool>& stop) {
  while (!stop.load(std::memory_order_relaxed)) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return;
    auto slice = std::min<std::chrono::nanoseconds>(deadline - now, std::chrono::milliseconds(10));
    timespec ts{static_cast<time_t>(slice.count() / 1000000000),
                static_cast<long>(slice.count() % 1000000000)};
    ::clock_nanosleep(CLOCK_MONOTONIC, 0, &ts, nullptr);
  }
}

template <class Alloc, class Smr, class Ds>
TrialRecord run_typed(const TrialConfig& cfg, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  TrialRecord rec;
  rec.config = cfg;
  const int n = cfg.threads;

  Alloc alloc;
  alloc.set_context(std::string(to_string(cfg.structure)) + "/" +
                    std::string(to_string(cfg.scheme)));
  {
    RuntimeConfig rt;
    rt.max_threads = n;
    rt.post_broadcast_delay = cfg.post_broadcast_delay;
    Smr smr(alloc, cfg.smr, rt);
    DsConfig dcfg = cfg.ds;
    Ds ds(smr, dcfg);

    std::barrier sync(n + 1);
    std::atomic<bool> stop{false};
    std::atomic<std::int64_t> prefilled{0};
    std::atomic<std::int64_t> deadline_ns{0};
    const auto target = static_cast<std::int64_t>(cfg.prefill * static_cast<double>(cfg.key_range));
    PerThread<std::atomic<std::uint64_t>> ops(n);

    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) {
      workers.emplace_back([&, w] {
        const int tid = smr.register_thread();
        OpStream stream(seed, static_cast<std::uint64_t>(w), cfg.workload, cfg.key_range);
        sync.arrive_and_wait();
        while (prefilled.load(std::memory_order_relaxed) < target && !alloc.aborted())
          if (ds.insert(tid, stream.key())) prefilled.fetch_add(1, std::memory_order_relaxed);
        sync.arrive_and_wait();
        sync.arrive_and_wait();
        std::uint64_t done = 0;
        if (cfg.stall == Stall::one && w == 0) {
          const clock::time_point deadline{
              std::chrono::nanoseconds(deadline_ns.load(std::memory_order_acquire))};
          ds.contains_with_hook(tid, cfg.key_range / 2, [&] { sleep_until(deadline, stop); });
          done = 1;
        } else {
          while (!stop.load(std::memory_order_relaxed)) {
            Op op = stream.next();
            switch (op.kind) {
              case OpKind::insert: ds.insert(tid, op.key); break;
              case OpKind::remove: ds.remove(tid, op.key); break;
              case OpKind::contains: ds.contains(tid, op.key); break;
            }
            ++done;
          }
        }
        ops[tid].store(done, std::memory_order_relaxed);
        smr.drain(tid);
        sync.arrive_and_wait();
      });
    }

    sync.arrive_and_wait();  // registered
    sync.arrive_and_wait();  // prefilled
    alloc.reset_peaks();
    const auto start = clock::now();
    const auto deadline =
        start + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(cfg.duration));
    deadline_ns.store(std::chrono::duration_cast<std::chrono::nanoseconds>(deadline.time_since_epoch()).count(),
                      std::memory_order_release);
    sync.arrive_and_wait();  // go
    while (clock::now() < deadline) {
      if (alloc.aborted()) break;
      if (alloc.stats().live_bytes > cfg.memory_cap_bytes) {
        rec.hit_memory_cap = true;
        std::cerr << "memory cap reached (" << alloc.stats().live_bytes
                  << " live bytes); stopping " << to_string(cfg.structure) << "/"
                  << to_string(cfg.scheme) << " early\n";
        break;
      }
      auto left = deadline - clock::now();
      std::this_thread::sleep_for(std::min<clock::duration>(left, std::chrono::milliseconds(20)));
    }
    stop.store(true, std::memory_order_relaxed);
    rec.elapsed_s = std::chrono::duration<double>(clock::now() - start).count();
    sync.arrive_and_wait();  // drained
    for (auto& t : workers) t.join();

    for (int t = 0; t < n; ++t) rec.ops_total += ops[t].load();
    SmrStats s = smr.stats();
    rec.signals_sent = s.signals_sent;
    rec.restarts = s.restarts;
    rec.fences_on_read_path = s.fences_on_read_path;
    rec.slow_path_triggers = s.slow_path_triggers;
  }
  AllocStats a = alloc.stats();
  rec.peak_live_bytes = a.peak_live_bytes;
  rec.peak_retired_nodes = a.peak_retired_nodes;
  rec.violations = alloc.violations().total();
  rec.first_violation = alloc.first_violation();
  rec.throughput_ops_per_s =
      rec.elapsed_s > 0 ? static_cast<double>(rec.ops_total) / rec.elapsed_s : 0.0;
  return rec;
}

/// Pairs that can be instantiated at all (the Harris override compiles in).
constexpr bool instantiable(DsKind ds, SchemeKind s) {
  switch (ds) {
    case DsKind::lazy_list:
      return s == SchemeKind::none || s == SchemeKind::ebr || s == SchemeKind::nbr ||
             s == SchemeKind::nbrplus || s == SchemeKind::epochpop;
    case DsKind::harris_list:
      return s == SchemeKind::none || s == SchemeKind::ebr || s == SchemeKind::nbr ||
             s == SchemeKind::nbrplus || s == SchemeKind::he || s == SchemeKind::pophe;
    default:
      return true;
  }
}

template <class Alloc, SchemeKind S>
TrialRecord run_with_scheme(const TrialConfig& cfg, std::uint64_t seed) {
  using Smr = scheme_t<S, Alloc>;
  auto go = [&]<DsKind D>() -> TrialRecord {
    if constexpr (instantiable(D, S)) {
      return run_typed<Alloc, Smr, structure_t<D, Smr>>(cfg, seed);
    } else {
      throw InvalidPairing(D, S);
    }
  };
  switch (cfg.structure) {
    case DsKind::lazy_list: return go.template operator()<DsKind::lazy_list>();
    case DsKind::harris_list: return go.template operator()<DsKind::harris_list>();
    case DsKind::hm_list: return go.template operator()<DsKind::hm_list>();
    case DsKind::hash_table: return go.template operator()<DsKind::hash_table>();
    case DsKind::ext_bst: return go.template operator()<DsKind::ext_bst>();
  }
  throw std::invalid_argument("unknown structure");
}

template <class Alloc>
TrialRecord run_with_alloc(const TrialConfig& cfg, std::uint64_t seed) {
  switch (cfg.scheme) {
    case SchemeKind::none: return run_with_scheme<Alloc, SchemeKind::none>(cfg, seed);
    case SchemeKind::ebr: return run_with_scheme<Alloc, SchemeKind::ebr>(cfg, seed);
    case SchemeKind::hp: return run_with_scheme<Alloc, SchemeKind::hp>(cfg, seed);
    case SchemeKind::he: return run_with_scheme<Alloc, SchemeKind::he>(cfg, seed);
    case SchemeKind::pophp: return run_with_scheme<Alloc, SchemeKind::pophp>(cfg, seed);
    case SchemeKind::pophe: return run_with_scheme<Alloc, SchemeKind::pophe>(cfg, seed);
    case SchemeKind::epochpop: return run_with_scheme<Alloc, SchemeKind::epochpop>(cfg, seed);
    case SchemeKind::nbr: return run_with_scheme<Alloc, SchemeKind::nbr>(cfg, seed);
    case SchemeKind::nbrplus: return run_with_scheme<Alloc, SchemeKind::nbrplus>(cfg, seed);
  }
  throw std::invalid_argument("unknown scheme");
}

}  // namespace detail

/// Runs trial number `index` of `cfg` (seeds differ per trial index).
inline TrialRecord run_trial(const TrialConfig& cfg, int index = 0) {
  validate(cfg);
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ULL;
  if (cfg.alloc_mode == AllocMode::validate)
    return detail::run_with_alloc<GuardAlloc<AllocMode::validate>>(cfg, seed);
  return detail::run_with_alloc<GuardAlloc<AllocMode::release>>(cfg, seed);
}

/// Runs cfg.trials trials and returns one record per trial.
inline std::vector<TrialRecord> run_trials(const TrialConfig& cfg) {
  validate(cfg);
  std::vector<TrialRecord> out;
  for (int i = 0; i < cfg.trials; ++i) out.push_back(run_trial(cfg, i));
  return out;
}

}  // namespace reclaim::bench
