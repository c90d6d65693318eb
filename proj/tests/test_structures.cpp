#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "reclaim/bench/trial.hpp"
#include "support/actor.hpp"
#include "support/dispatch.hpp"
#include "support/linearizability.hpp"

using namespace reclaim;
using testing_support::Actor;
using testing_support::for_each_pair;

namespace {

using Alloc = GuardAlloc<AllocMode::validate>;

// Small thresholds so that reclamation runs many times in short tests.
SmrConfig busy_config() {
  SmrConfig c;
  c.reclaim_freq = 64;
  c.pop_reclaim_freq = 64;
  c.epoch_freq = 8;
  c.nbr_hi_watermark = 64;
  c.nbr_scan_amortization = 4;
  return c;
}

RuntimeConfig threads(int n) {
  RuntimeConfig rc;
  rc.max_threads = n;
  return rc;
}

std::string pair_name(DsKind d, SchemeKind s) {
  return std::string(to_string(d)) + "/" + std::string(to_string(s));
}

struct SeqResult {
  std::vector<bool> trace;
  std::vector<Key> keys;
  bool invariants = false;
};

// Runs `ops` random operations on one registered thread, checking each
// answer against std::set as it goes.
template <DsKind D, SchemeKind S>
SeqResult run_sequential(std::uint64_t seed, int ops, Key range, DsConfig dcfg = {}) {
  using Smr = scheme_t<S, Alloc>;
  using Ds = structure_t<D, Smr>;
  SCOPED_TRACE(pair_name(D, S));
  SeqResult out;
  Alloc a;
  {
    Smr smr(a, busy_config(), threads(1));
    Ds ds(smr, dcfg);
    Actor actor;
    actor.run([&] {
      int tid = smr.register_thread();
      std::set<Key> model;
      std::mt19937_64 rng(seed);
      for (int i = 0; i < ops; ++i) {
        Key k = rng() % range;
        bool got = false;
        bool want = false;
        switch (rng() % 3) {
          case 0:
            got = ds.insert(tid, k);
            want = model.insert(k).second;
            break;
          case 1:
            got = ds.remove(tid, k);
            want = model.erase(k) == 1;
            break;
          default:
            got = ds.contains(tid, k);
            want = model.count(k) == 1;
        }
        ASSERT_EQ(got, want) << "op " << i << " key " << k;
        out.trace.push_back(got);
      }
      out.keys = ds.keys();
      out.invariants = ds.check_invariants();
      EXPECT_EQ(out.keys, std::vector<Key>(model.begin(), model.end()));
      smr.drain(tid);
    });
  }
  EXPECT_EQ(a.violations().total(), 0u) << a.first_violation();
  EXPECT_EQ(a.stats().live_bytes, 0u);
  return out;
}

}  // namespace

TEST(Structures, SequentialAgreesWithStdSet) {
  for_each_pair([]<DsKind D, SchemeKind S>() {
    SeqResult r = run_sequential<D, S>(7, 20000, 128);
    EXPECT_TRUE(r.invariants) << pair_name(D, S);
  });
}

TEST(Structures, ResultsDoNotDependOnScheme) {
  std::map<DsKind, std::vector<bool>> first;
  for_each_pair([&]<DsKind D, SchemeKind S>() {
    SeqResult r = run_sequential<D, S>(99, 5000, 64);
    auto [it, fresh] = first.emplace(D, r.trace);
    if (!fresh) {
      EXPECT_EQ(it->second, r.trace) << pair_name(D, S);
    }
  });
  // every structure answers the same stream identically too
  for (auto& [d, trace] : first) EXPECT_EQ(trace, first.begin()->second) << to_string(d);
}

TEST(Structures, ConcurrentCardinalityIsConserved) {
  for_each_pair([]<DsKind D, SchemeKind S>() {
    using Smr = scheme_t<S, Alloc>;
    using Ds = structure_t<D, Smr>;
    SCOPED_TRACE(pair_name(D, S));
    constexpr int kThreads = 4;
    Alloc a;
    {
      Smr smr(a, busy_config(), threads(kThreads));
      Ds ds(smr);
      std::vector<long> net(kThreads, 0);
      std::vector<std::thread> ts;
      for (int w = 0; w < kThreads; ++w)
        ts.emplace_back([&, w] {
          int tid = smr.register_thread();
          std::mt19937_64 rng(1000 + static_cast<unsigned>(w));
          for (int i = 0; i < 4000; ++i) {
            Key k = rng() % 48;
            switch (rng() % 3) {
              case 0: net[static_cast<std::size_t>(w)] += ds.insert(tid, k); break;
              case 1: net[static_cast<std::size_t>(w)] -= ds.remove(tid, k); break;
              default: ds.contains(tid, k);
            }
            if (i % 64 == 0) std::this_thread::yield();
          }
          smr.drain(tid);
        });
      for (auto& t : ts) t.join();
      long total = 0;
      for (long n : net) total += n;
      EXPECT_EQ(static_cast<long>(ds.keys().size()), total);
      EXPECT_TRUE(ds.check_invariants());
    }
    EXPECT_EQ(a.violations().total(), 0u) << a.first_violation();
    EXPECT_EQ(a.stats().live_bytes, 0u);
  });
}

TEST(Structures, HarrisListWithHazardErasOnlyByOverride) {
  EXPECT_FALSE(pairing_allowed(DsKind::harris_list, SchemeKind::he));
  EXPECT_FALSE(pairing_allowed(DsKind::harris_list, SchemeKind::pophe));
  PairingOptions opt;
  opt.harris_hazard_eras = true;
  EXPECT_TRUE(pairing_allowed(DsKind::harris_list, SchemeKind::he, opt));
  run_sequential<DsKind::harris_list, SchemeKind::he>(3, 5000, 64);
  run_sequential<DsKind::harris_list, SchemeKind::pophe>(3, 5000, 64);
}

TEST(Structures, PairingTable) {
  auto names = [](DsKind d) {
    std::string s;
    for (SchemeKind k : schemes_for(d)) s += std::string(to_string(k)) + " ";
    return s;
  };
  EXPECT_EQ(names(DsKind::lazy_list), "none ebr epochpop nbr nbrplus ");
  EXPECT_EQ(names(DsKind::harris_list), "none ebr nbr nbrplus ");
  EXPECT_EQ(schemes_for(DsKind::hm_list).size(), 9u);
  EXPECT_EQ(schemes_for(DsKind::hash_table).size(), 9u);
  EXPECT_EQ(schemes_for(DsKind::ext_bst).size(), 9u);
  EXPECT_THROW(require_pairing(DsKind::lazy_list, SchemeKind::hp), InvalidPairing);
  EXPECT_THROW(require_pairing(DsKind::harris_list, SchemeKind::pophp), InvalidPairing);
  EXPECT_NO_THROW(require_pairing(DsKind::ext_bst, SchemeKind::pophe));
}

TEST(Structures, ExtremeKeys) {
  Alloc a;
  using Smr = Ebr<Alloc>;
  Smr smr(a, {}, threads(1));
  ExtBst<Smr> bst(smr);
  HmList<Smr> list(smr);
  Actor t;
  t.run([&] {
    int tid = smr.register_thread();
    for (Key k : {Key{0}, kMaxKey, kMaxKey - 1}) {
      EXPECT_TRUE(bst.insert(tid, k));
      EXPECT_TRUE(list.insert(tid, k));
      EXPECT_TRUE(bst.contains(tid, k));
      EXPECT_TRUE(list.contains(tid, k));
    }
    EXPECT_FALSE(bst.insert(tid, kMaxKey));
    EXPECT_TRUE(bst.remove(tid, kMaxKey));
    EXPECT_FALSE(bst.contains(tid, kMaxKey));
    EXPECT_TRUE(bst.check_invariants());
    EXPECT_TRUE(list.check_invariants());
  });
}

TEST(Structures, HashTableWithFewBuckets) {
  DsConfig c;
  c.buckets = 3;
  SeqResult r = run_sequential<DsKind::hash_table, SchemeKind::hp>(5, 10000, 90, c);
  EXPECT_TRUE(r.invariants);
}

TEST(Structures, NamesRoundTrip) {
  for (DsKind d : kAllStructures) EXPECT_EQ(parse_structure(to_string(d)), d);
  EXPECT_THROW(parse_structure("skiplist"), std::invalid_argument);
}

namespace {

using testing_support::HistoryOp;
using testing_support::LinearizabilityChecker;

}  // namespace

TEST(LinearizabilityChecker, AcceptsOverlappingReorder) {
  // contains(1) overlaps insert(1) and may take effect after it
  std::vector<HistoryOp> h{{bench::OpKind::insert, 1, true, 0, 3},
                           {bench::OpKind::contains, 1, true, 1, 2}};
  EXPECT_TRUE(LinearizabilityChecker().check(h, 0));
}

TEST(LinearizabilityChecker, RejectsRealTimeViolation) {
  // contains(1) finished before insert(1) began, yet saw the key
  std::vector<HistoryOp> h{{bench::OpKind::contains, 1, true, 0, 1},
                           {bench::OpKind::insert, 1, true, 2, 3}};
  EXPECT_FALSE(LinearizabilityChecker().check(h, 0));
}

TEST(LinearizabilityChecker, RejectsDoubleSuccessfulInsert) {
  std::vector<HistoryOp> h{{bench::OpKind::insert, 4, true, 0, 5},
                           {bench::OpKind::insert, 4, true, 1, 6}};
  EXPECT_FALSE(LinearizabilityChecker().check(h, 0));
  // but one of them may fail
  h[1].result = false;
  EXPECT_TRUE(LinearizabilityChecker().check(h, 0));
}

TEST(LinearizabilityChecker, UsesInitialState) {
  std::vector<HistoryOp> h{{bench::OpKind::remove, 2, true, 0, 1}};
  EXPECT_FALSE(LinearizabilityChecker().check(h, 0));
  EXPECT_TRUE(LinearizabilityChecker().check(h, 1u << 2));
}
