// Lazy list: lock-free traversal, per-node locks for updates, logical
// deletion via a mark flag set before the physical unlink.
#pragma once

#include <vector>

#include "reclaim/ds/common.hpp"

namespace reclaim {

template <class Smr>
class LazyList {
  static constexpr SchemeKind kind = Smr::descriptor.kind;
  static_assert(kind != SchemeKind::hp && kind != SchemeKind::he &&
                    kind != SchemeKind::pophp && kind != SchemeKind::pophe,
                "hazard pointer/era schemes cannot validate lazy-list traversals");

  struct Node {
    Key key;
    std::atomic<Node*> next{nullptr};
    std::atomic<bool> marked{false};
    SpinLock lock;
    explicit Node(Key k, Node* n = nullptr) : key(k), next(n) {}
  };

 public:
  static constexpr DsKind ds_kind = DsKind::lazy_list;

  explicit LazyList(Smr& smr, DsConfig = {}) : smr_(smr), spare_(smr.max_threads()) {
    tail_ = smr_.alloc().template create<Node>(kInf2);
    head_ = smr_.alloc().template create<Node>(0, tail_);
  }

  LazyList(const LazyList&) = delete;
  LazyList& operator=(const LazyList&) = delete;

  ~LazyList() {
    Node* n = head_;
    while (n != nullptr) {
      Node* next = n->next.load(std::memory_order_relaxed);
      smr_.alloc().free_node(n);
      n = next;
    }
    for (int t = 0; t < spare_.size(); ++t) smr_.alloc().free_node(spare_[t]);
  }

  bool insert(int tid, Key key) {
    Node* fresh = take_spare(tid, key);
    smr_.start_op(tid);
    for (;;) {
      auto [pred, curr] = locate(tid, key);
      pred->lock.lock();
      curr->lock.lock();
      if (valid(pred, curr)) {
        bool added = false;
        if (curr->key != key) {
          fresh->key = key;
          fresh->next.store(curr, std::memory_order_relaxed);
          pred->next.store(fresh, std::memory_order_release);
          spare_[tid] = nullptr;
          added = true;
        }
        curr->lock.unlock();
        pred->lock.unlock();
        smr_.end_op(tid);
        return added;
      }
      curr->lock.unlock();
      pred->lock.unlock();
    }
  }

  bool remove(int tid, Key key) {
    smr_.start_op(tid);
    for (;;) {
      auto [pred, curr] = locate(tid, key);
      pred->lock.lock();
      curr->lock.lock();
      if (valid(pred, curr)) {
        bool removed = false;
        if (curr->key == key) {
          curr->marked.store(true, std::memory_order_release);
          pred->next.store(curr->next.load(std::memory_order_acquire),
                           std::memory_order_release);
          removed = true;
        }
        curr->lock.unlock();
        pred->lock.unlock();
        if (removed) smr_.retire(tid, curr);
        smr_.end_op(tid);
        return removed;
      }
      curr->lock.unlock();
      pred->lock.unlock();
    }
  }

  bool contains(int tid, Key key) { return contains_with_hook(tid, key, NoHook{}); }

  /// `hook` runs at the end of the traversal while the read phase is still
  /// open.
  template <class Hook>
  bool contains_with_hook(int tid, Key key, Hook&& hook) {
    smr_.start_op(tid);
    bool found = search(tid, key, hook);
    smr_.end_op(tid);
    return found;
  }

  /// Keys in list order; only valid while no operation runs.
  std::vector<Key> keys() const {
    std::vector<Key> out;
    for (Node* n = head_->next.load(); n != tail_; n = n->next.load())
      if (!n->marked.load()) out.push_back(n->key);
    return out;
  }

  bool check_invariants() const {
    Key prev = 0;
    bool first = true;
    for (Node* n = head_->next.load(); n != tail_; n = n->next.load()) {
      if (n == nullptr || n->marked.load()) return false;
      if (!first && n->key <= prev) return false;
      prev = n->key;
      first = false;
    }
    return true;
  }

 private:
  struct Window {
    Node* pred;
    Node* curr;
  };

  Node* live(Node* n) {
    smr_.alloc().assert_live(n);
    return n;
  }

  Node* take_spare(int tid, Key key) {
    if (spare_[tid] == nullptr) spare_[tid] = smr_.template create<Node>(tid, key);
    return spare_[tid];
  }

  bool valid(Node* pred, Node* curr) {
    return !live(pred)->marked.load(std::memory_order_acquire) &&
           !live(curr)->marked.load(std::memory_order_acquire) &&
           pred->next.load(std::memory_order_acquire) == curr;
  }

  Window locate(int tid, Key key) {
  [[maybe_unused]] retry:
    RECLAIM_BEGIN_READ_PHASE(smr_, tid);
    {
      int sp = 0;
      int sc = 1;
      Node* pred = head_;
      Node* curr = smr_read(smr_, tid, head_->next, sc);
      while (live(curr)->key < key) {
        pred = curr;
        std::swap(sp, sc);
        curr = smr_read(smr_, tid, pred->next, sc);
        if constexpr (Smr::descriptor.needs_read_hook) {
          if (pred->marked.load(std::memory_order_acquire)) goto retry;
        }
      }
      smr_.end_read(tid, {pred, curr});
      return {pred, curr};
    }
  }

  template <class Hook>
  bool search(int tid, Key key, Hook& hook) {
  [[maybe_unused]] retry:
    RECLAIM_BEGIN_READ_PHASE(smr_, tid);
    {
      int sp = 0;
      int sc = 1;
      Node* curr = smr_read(smr_, tid, head_->next, sc);
      while (live(curr)->key < key) {
        Node* pred = curr;
        std::swap(sp, sc);
        curr = smr_read(smr_, tid, pred->next, sc);
        if constexpr (Smr::descriptor.needs_read_hook) {
          if (pred->marked.load(std::memory_order_acquire)) goto retry;
        }
      }
      bool found = curr->key == key && !curr->marked.load(std::memory_order_acquire);
      hook();
      smr_.end_read(tid, {});
      return found;
    }
  }

  Smr& smr_;
  Node* head_;
  Node* tail_;
  PerThread<Node*> spare_;
};

}  // namespace reclaim
