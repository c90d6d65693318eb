// Operation mixes and deterministic per-thread operation streams.
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "reclaim/ds/common.hpp"

namespace reclaim::bench {

struct Workload {
  int insert = 50;
  int remove = 50;
  int contains = 0;

  [[nodiscard]] std::string str() const {
    return std::to_string(insert) + ":" + std::to_string(remove) + ":" +
           std::to_string(contains);
  }
  friend bool operator==(const Workload&, const Workload&) = default;
};

/// Parses "I:D:C" percentages; they must sum to 100.
inline Workload parse_workload(std::string_view s) {
  if (std::count(s.begin(), s.end(), ':') != 2)
    throw std::invalid_argument("workload must be I:D:C");
  int parts[3] = {0, 0, 0};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t end = i < 2 ? s.find(':', pos) : s.size();
    auto field = s.substr(pos, end - pos);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[i]);
    if (ec != std::errc{} || ptr != field.data() + field.size() || parts[i] < 0)
      throw std::invalid_argument("bad workload percentage: " + std::string(field));
    pos = end + 1;
  }
  Workload w{parts[0], parts[1], parts[2]};
  if (w.insert + w.remove + w.contains != 100)
    throw std::invalid_argument("workload percentages must sum to 100");
  return w;
}

enum class OpKind { insert, remove, contains };

struct Op {
  OpKind kind;
  Key key;
  friend bool operator==(const Op&, const Op&) = default;
};

/// Per-worker stream: same (seed, worker) always yields the same sequence.
class OpStream {
 public:
  OpStream(std::uint64_t seed, std::uint64_t worker, Workload w, std::uint64_t key_range)
      : w_(w), keys_(0, key_range == 0 ? 0 : key_range - 1), pct_(0, 99) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(worker),
                      static_cast<std::uint32_t>(worker >> 32)};
    rng_.seed(seq);
  }

  Op next() {
    int roll = pct_(rng_);
    OpKind k = roll < w_.insert                ? OpKind::insert
               : roll < w_.insert + w_.remove ? OpKind::remove
                                              : OpKind::contains;
    return {k, keys_(rng_)};
  }

  Key key() { return keys_(rng_); }

 private:
  Workload w_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<Key> keys_;
  std::uniform_int_distribution<int> pct_;
};

}  // namespace reclaim::bench
