// Harris-Michael list: like the Harris list, but a traversal unlinks marked
// nodes one at a time and validates its predecessor after every step, which
// is what hazard-pointer style protection needs.
#pragma once

#include <vector>

#include "reclaim/ds/common.hpp"

namespace reclaim {

/// Bucket-independent list machinery; a list is identified by its head node.
/// Shared by the plain list and the hash table.
template <class Smr>
class HmCore {
 public:
  struct Node {
    Key key;
    std::atomic<std::uintptr_t> next{0};
    explicit Node(Key k, Node* n = nullptr) : key(k), next(as_word(n)) {}
  };

  HmCore(Smr& smr, bool restart_from_head)
      : smr_(smr),
        restart_from_head_(restart_from_head || Smr::descriptor.restart_capable),
        spare_(smr.max_threads()) {
    tail_ = smr_.alloc().template create<Node>(kInf2);
  }

  HmCore(const HmCore&) = delete;
  HmCore& operator=(const HmCore&) = delete;

  ~HmCore() {
    for (int t = 0; t < spare_.size(); ++t) smr_.alloc().free_node(spare_[t]);
    smr_.alloc().free_node(tail_);
  }

  Node* make_head() { return smr_.alloc().template create<Node>(0, tail_); }

  void destroy_list(Node* head) {
    Node* n = head;
    while (n != tail_) {
      Node* next = as_node<Node>(n->next.load(std::memory_order_relaxed));
      smr_.alloc().free_node(n);
      n = next;
    }
  }

  bool insert(Node* head, int tid, Key key) {
    if (spare_[tid] == nullptr) spare_[tid] = smr_.template create<Node>(tid, key);
    Node* fresh = spare_[tid];
    smr_.start_op(tid);
    NoHook none;
    for (;;) {
      Pos pos = find(head, tid, key, none);
      if (pos.found) {
        smr_.end_op(tid);
        return false;
      }
      fresh->key = key;
      fresh->next.store(as_word(pos.cur), std::memory_order_relaxed);
      std::uintptr_t expected = as_word(pos.cur);
      if (pos.prev->next.compare_exchange_strong(expected, as_word(fresh),
                                                 std::memory_order_acq_rel)) {
        spare_[tid] = nullptr;
        smr_.end_op(tid);
        return true;
      }
    }
  }

  bool remove(Node* head, int tid, Key key) {
    smr_.start_op(tid);
    NoHook none;
    for (;;) {
      Pos pos = find(head, tid, key, none);
      if (!pos.found) {
        smr_.end_op(tid);
        return false;
      }
      std::uintptr_t next = live(pos.cur)->next.load(std::memory_order_acquire);
      if (is_marked(next)) continue;
      if (!pos.cur->next.compare_exchange_strong(next, next | kMark,
                                                 std::memory_order_acq_rel))
        continue;
      std::uintptr_t expected = as_word(pos.cur);
      if (pos.prev->next.compare_exchange_strong(expected, next, std::memory_order_acq_rel))
        smr_.retire(tid, pos.cur);
      else
        find(head, tid, key, none);
      smr_.end_op(tid);
      return true;
    }
  }

  template <class Hook>
  bool contains(Node* head, int tid, Key key, Hook& hook) {
    smr_.start_op(tid);
    bool found;
    if constexpr (Smr::descriptor.needs_read_hook) {
      found = find(head, tid, key, hook).found;
    } else {
      found = scan(head, tid, key, hook);
    }
    smr_.end_op(tid);
    return found;
  }

  void collect_keys(Node* head, std::vector<Key>& out) const {
    for (Node* n = as_node<Node>(head->next.load()); n != tail_;
         n = as_node<Node>(n->next.load()))
      if (!is_marked(n->next.load())) out.push_back(n->key);
  }

  [[nodiscard]] bool restart_from_head() const noexcept { return restart_from_head_; }
  Node* tail() const noexcept { return tail_; }

 private:
  struct Pos {
    Node* prev;
    Node* cur;
    bool found;
  };

  Node* live(Node* n) {
    smr_.alloc().assert_live(n);
    return n;
  }

  template <class Hook>
  Pos find(Node* head, int tid, Key key, Hook& hook) {
  try_again:
    RECLAIM_BEGIN_READ_PHASE(smr_, tid);
    {
      int s_prev = 0;
      int s_cur = 1;
      int s_next = 2;
      Node* prev = head;
      std::uintptr_t cur_word = smr_read(smr_, tid, head->next, s_cur);
      for (;;) {
        Node* cur = as_node<Node>(cur_word);
        if (cur == tail_) {
          hook();
          smr_.end_read(tid, {prev, cur});
          return {prev, cur, false};
        }
        std::uintptr_t next_word = smr_read(smr_, tid, live(cur)->next, s_next);
        if (live(prev)->next.load(std::memory_order_acquire) != cur_word) goto try_again;
        if (!is_marked(next_word)) {
          if (cur->key >= key) {
            bool found = cur->key == key;
            hook();
            smr_.end_read(tid, {prev, cur});
            return {prev, cur, found};
          }
          prev = cur;
          int freed_slot = s_prev;
          s_prev = s_cur;
          s_cur = s_next;
          s_next = freed_slot;
        } else {
          std::uintptr_t unmarked = next_word & ~kMark;
          smr_.end_read(tid, {prev, cur});
          std::uintptr_t expected = cur_word;
          if (!prev->next.compare_exchange_strong(expected, unmarked,
                                                  std::memory_order_acq_rel))
            goto try_again;
          smr_.retire(tid, cur);
          if (restart_from_head_) goto try_again;
          std::swap(s_cur, s_next);
          next_word = unmarked;
        }
        cur_word = next_word;
      }
    }
  }

  template <class Hook>
  bool scan(Node* head, int tid, Key key, Hook& hook) {
    RECLAIM_BEGIN_READ_PHASE(smr_, tid);
    Node* cur = as_node<Node>(head->next.load(std::memory_order_acquire));
    while (cur != tail_ && live(cur)->key < key)
      cur = as_node<Node>(cur->next.load(std::memory_order_acquire));
    bool found = cur != tail_ && cur->key == key &&
                 !is_marked(cur->next.load(std::memory_order_acquire));
    hook();
    smr_.end_read(tid, {});
    return found;
  }

  Smr& smr_;
  bool restart_from_head_;
  Node* tail_;
  PerThread<Node*> spare_;
};

template <class Smr>
class HmList {
  using Core = HmCore<Smr>;

 public:
  static constexpr DsKind ds_kind = DsKind::hm_list;

  explicit HmList(Smr& smr, DsConfig cfg = {})
      : core_(smr, cfg.restart_from_head), head_(core_.make_head()) {}

  ~HmList() { core_.destroy_list(head_); }

  bool insert(int tid, Key key) { return core_.insert(head_, tid, key); }
  bool remove(int tid, Key key) { return core_.remove(head_, tid, key); }
  bool contains(int tid, Key key) {
    NoHook none;
    return core_.contains(head_, tid, key, none);
  }
  template <class Hook>
  bool contains_with_hook(int tid, Key key, Hook&& hook) {
    return core_.contains(head_, tid, key, hook);
  }

  std::vector<Key> keys() const {
    std::vector<Key> out;
    core_.collect_keys(head_, out);
    return out;
  }

  bool check_invariants() const {
    auto k = keys();
    for (std::size_t i = 1; i < k.size(); ++i)
      if (k[i - 1] >= k[i]) return false;
    return true;
  }

  [[nodiscard]] bool restart_from_head() const noexcept { return core_.restart_from_head(); }

 private:
  Core core_;
  typename Core::Node* head_;
};

}  // namespace reclaim
