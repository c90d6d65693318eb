// Harris list: deletion marks the low bit of a node's next word, and a search
// unlinks any run of marked nodes between its left and right nodes with one
// CAS. The thread whose CAS unlinks a run retires every node in it.
#pragma once

#include <vector>

#include "reclaim/ds/common.hpp"

namespace reclaim {

template <class Smr>
class HarrisList {
  static constexpr SchemeKind kind = Smr::descriptor.kind;
  static_assert(kind != SchemeKind::hp && kind != SchemeKind::pophp &&
                    kind != SchemeKind::epochpop,
                "hazard-pointer protection cannot follow chains of marked nodes");

  struct Node {
    Key key;
    std::atomic<std::uintptr_t> next{0};
    explicit Node(Key k, Node* n = nullptr) : key(k), next(as_word(n)) {}
  };

 public:
  static constexpr DsKind ds_kind = DsKind::harris_list;

  explicit HarrisList(Smr& smr, DsConfig = {}) : smr_(smr), spare_(smr.max_threads()) {
    tail_ = smr_.alloc().template create<Node>(kInf2);
    head_ = smr_.alloc().template create<Node>(0, tail_);
  }

  HarrisList(const HarrisList&) = delete;
  HarrisList& operator=(const HarrisList&) = delete;

  ~HarrisList() {
    Node* n = head_;
    while (n != nullptr) {
      Node* next = as_node<Node>(n->next.load(std::memory_order_relaxed));
      smr_.alloc().free_node(n);
      n = next;
    }
    for (int t = 0; t < spare_.size(); ++t) smr_.alloc().free_node(spare_[t]);
  }

  bool insert(int tid, Key key) {
    if (spare_[tid] == nullptr) spare_[tid] = smr_.template create<Node>(tid, key);
    Node* fresh = spare_[tid];
    smr_.start_op(tid);
    for (;;) {
      auto [left, right] = search(tid, key);
      if (right != tail_ && right->key == key) {
        smr_.end_op(tid);
        return false;
      }
      fresh->key = key;
      fresh->next.store(as_word(right), std::memory_order_relaxed);
      std::uintptr_t expected = as_word(right);
      if (left->next.compare_exchange_strong(expected, as_word(fresh),
                                             std::memory_order_acq_rel)) {
        spare_[tid] = nullptr;
        smr_.end_op(tid);
        return true;
      }
    }
  }

  bool remove(int tid, Key key) {
    smr_.start_op(tid);
    Node* left;
    Node* right;
    std::uintptr_t right_next;
    for (;;) {
      auto w = search(tid, key);
      left = w.left;
      right = w.right;
      if (right == tail_ || right->key != key) {
        smr_.end_op(tid);
        return false;
      }
      right_next = right->next.load(std::memory_order_acquire);
      if (!is_marked(right_next) &&
          right->next.compare_exchange_strong(right_next, right_next | kMark,
                                              std::memory_order_acq_rel))
        break;
    }
    std::uintptr_t expected = as_word(right);
    if (left->next.compare_exchange_strong(expected, right_next,
                                           std::memory_order_acq_rel)) {
      smr_.retire(tid, right);
    } else {
      search(tid, key);
    }
    smr_.end_op(tid);
    return true;
  }

  bool contains(int tid, Key key) { return contains_with_hook(tid, key, NoHook{}); }

  template <class Hook>
  bool contains_with_hook(int tid, Key key, Hook&& hook) {
    smr_.start_op(tid);
    bool found = find(tid, key, hook);
    smr_.end_op(tid);
    return found;
  }

  std::vector<Key> keys() const {
    std::vector<Key> out;
    for (Node* n = as_node<Node>(head_->next.load()); n != tail_;
         n = as_node<Node>(n->next.load()))
      if (!is_marked(n->next.load())) out.push_back(n->key);
    return out;
  }

  bool check_invariants() const {
    bool first = true;
    Key prev = 0;
    for (Node* n = as_node<Node>(head_->next.load()); n != tail_;
         n = as_node<Node>(n->next.load())) {
      if (n == nullptr) return false;
      if (is_marked(n->next.load())) continue;
      if (!first && n->key <= prev) return false;
      prev = n->key;
      first = false;
    }
    return true;
  }

 private:
  struct Window {
    Node* left;
    Node* right;
  };

  Node* live(Node* n) {
    smr_.alloc().assert_live(n);
    return n;
  }

  Window search(int tid, Key key) {
  search_again:
    RECLAIM_BEGIN_READ_PHASE(smr_, tid);
    {
      int slot = 0;
      Node* left = head_;
      std::uintptr_t left_next = 0;
      Node* t = head_;
      std::uintptr_t t_next = smr_read(smr_, tid, head_->next, slot);
      do {
        if (!is_marked(t_next)) {
          left = t;
          left_next = t_next;
        }
        t = as_node<Node>(t_next);
        if (t == tail_) break;
        slot = (slot + 1) % 3;
        t_next = smr_read(smr_, tid, live(t)->next, slot);
      } while (is_marked(t_next) || t->key < key);
      Node* right = t;

      if (left_next == as_word(right)) {
        if (right != tail_ && is_marked(live(right)->next.load(std::memory_order_acquire)))
          goto search_again;
        smr_.end_read(tid, {left, right});
        return {left, right};
      }

      smr_.end_read(tid, {left, right});
      std::uintptr_t expected = left_next;
      if (left->next.compare_exchange_strong(expected, as_word(right),
                                             std::memory_order_acq_rel)) {
        // the unlinked run now belongs to this thread alone
        Node* n = as_node<Node>(left_next);
        while (n != right) {
          Node* after = as_node<Node>(live(n)->next.load(std::memory_order_acquire));
          smr_.retire(tid, n);
          n = after;
        }
        if (right != tail_ && is_marked(right->next.load(std::memory_order_acquire)))
          goto search_again;
        return {left, right};
      }
      goto search_again;
    }
  }

  template <class Hook>
  bool find(int tid, Key key, Hook& hook) {
    RECLAIM_BEGIN_READ_PHASE(smr_, tid);
    int slot = 0;
    Node* t = as_node<Node>(smr_read(smr_, tid, head_->next, slot));
    while (t != tail_ && live(t)->key < key) {
      slot = (slot + 1) % 3;
      t = as_node<Node>(smr_read(smr_, tid, t->next, slot));
    }
    bool found = t != tail_ && t->key == key &&
                 !is_marked(t->next.load(std::memory_order_acquire));
    hook();
    smr_.end_read(tid, {});
    return found;
  }

  Smr& smr_;
  Node* head_;
  Node* tail_;
  PerThread<Node*> spare_;
};

}  // namespace reclaim
