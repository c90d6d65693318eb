// Exhaustive linearizability check for set histories over small key spaces
// (Wing and Gong search with memoization on the linearized subset).
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "reclaim/bench/workload.hpp"

namespace testing_support {

using reclaim::bench::OpKind;

struct HistoryOp {
  OpKind kind;
  unsigned key;  // < 32
  bool result;
  std::uint64_t invoke;
  std::uint64_t response;
};

/// Applies `op` to a set encoded as a bitmask; false if the recorded result
/// disagrees with a sequential set.
inline bool apply(const HistoryOp& op, std::uint32_t& state) {
  const std::uint32_t bit = std::uint32_t{1} << op.key;
  const bool present = (state & bit) != 0;
  switch (op.kind) {
    case OpKind::insert:
      if (op.result == present) return false;
      state |= bit;
      return true;
    case OpKind::remove:
      if (op.result != present) return false;
      state &= ~bit;
      return true;
    case OpKind::contains:
      return op.result == present;
  }
  return false;
}

class LinearizabilityChecker {
 public:
  /// True if some total order consistent with real time explains every
  /// result, starting from `initial`.
  bool check(const std::vector<HistoryOp>& h, std::uint32_t initial) {
    if (h.size() > 32) throw std::invalid_argument("history too long");
    for (const auto& op : h)
      if (op.key >= 32) throw std::invalid_argument("key out of range");
    ops_ = &h;
    seen_.clear();
    return search(0, initial);
  }

 private:
  bool search(std::uint32_t done, std::uint32_t state) {
    const std::size_t n = ops_->size();
    if (done == (n == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1)) return true;
    if (!seen_.insert((std::uint64_t{done} << 32) | state).second) return false;
    std::uint64_t min_response = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i = 0; i < n; ++i)
      if (!(done >> i & 1)) min_response = std::min(min_response, (*ops_)[i].response);
    for (std::size_t i = 0; i < n; ++i) {
      if (done >> i & 1) continue;
      const HistoryOp& op = (*ops_)[i];
      // an op may go first only if nothing pending finished before it began
      if (op.invoke > min_response) continue;
      std::uint32_t next = state;
      if (!apply(op, next)) continue;
      if (search(done | (std::uint32_t{1} << i), next)) return true;
    }
    return false;
  }

  const std::vector<HistoryOp>* ops_ = nullptr;
  std::unordered_set<std::uint64_t> seen_;
};

}  // namespace testing_support
