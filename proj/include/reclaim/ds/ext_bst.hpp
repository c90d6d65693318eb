// External (leaf-oriented) binary search tree. Searches take no locks;
// updates lock the affected parent (and grandparent for deletes), validate
// that the nodes are still linked as seen, then swing one child pointer.
//
// Layout: root(kInf2).left = S(kInf1){leaf kInf1, leaf kInf2},
// root.right = leaf kInf2. Every caller key lives under S.left.
#pragma once

#include <vector>

#include "reclaim/ds/common.hpp"

namespace reclaim {

template <class Smr>
class ExtBst {
  struct Node {
    Key key;
    std::atomic<Node*> left{nullptr};
    std::atomic<Node*> right{nullptr};
    SpinLock lock;
    std::atomic<bool> removed{false};
    bool leaf;
    Node(Key k, bool is_leaf, Node* l = nullptr, Node* r = nullptr)
        : key(k), left(l), right(r), leaf(is_leaf) {}
  };

 public:
  static constexpr DsKind ds_kind = DsKind::ext_bst;

  explicit ExtBst(Smr& smr, DsConfig = {})
      : smr_(smr), spare_leaf_(smr.max_threads()), spare_inner_(smr.max_threads()) {
    auto& a = smr_.alloc();
    Node* s = a.template create<Node>(kInf1, false, a.template create<Node>(kInf1, true),
                                      a.template create<Node>(kInf2, true));
    root_ = a.template create<Node>(kInf2, false, s, a.template create<Node>(kInf2, true));
  }

  ExtBst(const ExtBst&) = delete;
  ExtBst& operator=(const ExtBst&) = delete;

  ~ExtBst() {
    std::vector<Node*> stack{root_};
    while (!stack.empty()) {
      Node* n = stack.back();
      stack.pop_back();
      if (!n->leaf) {
        stack.push_back(n->left.load(std::memory_order_relaxed));
        stack.push_back(n->right.load(std::memory_order_relaxed));
      }
      smr_.alloc().free_node(n);
    }
    for (int t = 0; t < spare_leaf_.size(); ++t) {
      smr_.alloc().free_node(spare_leaf_[t]);
      smr_.alloc().free_node(spare_inner_[t]);
    }
  }

  bool insert(int tid, Key key) {
    if (spare_leaf_[tid] == nullptr)
      spare_leaf_[tid] = smr_.template create<Node>(tid, key, true);
    if (spare_inner_[tid] == nullptr)
      spare_inner_[tid] = smr_.template create<Node>(tid, key, false);
    Node* leaf = spare_leaf_[tid];
    Node* inner = spare_inner_[tid];
    smr_.start_op(tid);
    NoHook none;
    for (;;) {
      Path path = search(tid, key, none, true);
      Node* p = path.p;
      Node* l = path.l;
      if (path.leaf_key == key) {
        smr_.end_op(tid);
        return false;
      }
      p->lock.lock();
      auto& child = key < p->key ? p->left : p->right;
      if (!p->removed.load(std::memory_order_acquire) &&
          child.load(std::memory_order_acquire) == l) {
        leaf->key = key;
        if (key < l->key) {
          inner->key = l->key;
          inner->left.store(leaf, std::memory_order_relaxed);
          inner->right.store(l, std::memory_order_relaxed);
        } else {
          inner->key = key;
          inner->left.store(l, std::memory_order_relaxed);
          inner->right.store(leaf, std::memory_order_relaxed);
        }
        child.store(inner, std::memory_order_release);
        p->lock.unlock();
        spare_leaf_[tid] = nullptr;
        spare_inner_[tid] = nullptr;
        smr_.end_op(tid);
        return true;
      }
      p->lock.unlock();
    }
  }

  bool remove(int tid, Key key) {
    smr_.start_op(tid);
    NoHook none;
    for (;;) {
      Path path = search(tid, key, none, false);
      Node* gp = path.gp;
      Node* p = path.p;
      Node* l = path.l;
      if (path.leaf_key != key) {
        smr_.end_op(tid);
        return false;
      }
      gp->lock.lock();
      p->lock.lock();
      auto& to_p = key < gp->key ? gp->left : gp->right;
      auto& to_l = key < p->key ? p->left : p->right;
      auto& to_sibling = key < p->key ? p->right : p->left;
      if (!gp->removed.load(std::memory_order_acquire) &&
          !p->removed.load(std::memory_order_acquire) &&
          to_p.load(std::memory_order_acquire) == p &&
          to_l.load(std::memory_order_acquire) == l) {
        Node* sibling = to_sibling.load(std::memory_order_acquire);
        p->removed.store(true, std::memory_order_release);
        l->removed.store(true, std::memory_order_release);
        to_p.store(sibling, std::memory_order_release);
        p->lock.unlock();
        gp->lock.unlock();
        smr_.retire(tid, p);
        smr_.retire(tid, l);
        smr_.end_op(tid);
        return true;
      }
      p->lock.unlock();
      gp->lock.unlock();
    }
  }

  bool contains(int tid, Key key) { return contains_with_hook(tid, key, NoHook{}); }

  template <class Hook>
  bool contains_with_hook(int tid, Key key, Hook&& hook) {
    smr_.start_op(tid);
    bool found = search(tid, key, hook, false, true).leaf_key == key;
    smr_.end_op(tid);
    return found;
  }

  /// Caller keys in order; only valid while no operation runs.
  std::vector<Key> keys() const {
    std::vector<Key> out;
    std::vector<Node*> stack{root_};
    while (!stack.empty()) {
      Node* n = stack.back();
      stack.pop_back();
      if (n->leaf) {
        if (n->key <= kMaxKey) out.push_back(n->key);
      } else {
        stack.push_back(n->right.load());
        stack.push_back(n->left.load());
      }
    }
    return out;
  }

  /// Every internal node routes smaller keys left and the rest right.
  /// Leaves satisfy lo <= key < hi; routing keys satisfy lo < key <= hi.
  bool check_invariants() const {
    struct Frame {
      Node* n;
      Key lo;
      Key hi;
      bool bounded;
    };
    std::vector<Frame> stack{{root_, 0, kInf2, false}};
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      if (f.n == nullptr || f.n->removed.load()) return false;
      const Key k = f.n->key;
      if (f.n->leaf) {
        if (k <= kMaxKey && (k < f.lo || (f.bounded && k >= f.hi))) return false;
      } else {
        if (f.n != root_ && k <= f.lo) return false;
        if (f.bounded && k > f.hi) return false;
      }
      if (!f.n->leaf) {
        stack.push_back({f.n->left.load(), f.lo, f.n->key, true});
        stack.push_back({f.n->right.load(), f.n->key, f.hi, f.bounded});
      }
    }
    return true;
  }

 private:
  struct Path {
    Node* gp;
    Node* p;
    Node* l;
    Key leaf_key;
  };

  Node* live(Node* n) {
    smr_.alloc().assert_live(n);
    return n;
  }

  template <class Hook>
  Path search(int tid, Key key, Hook& hook, bool for_insert, bool read_only = false) {
  [[maybe_unused]] retry:
    RECLAIM_BEGIN_READ_PHASE(smr_, tid);
    {
      int s_gp = 0;
      int s_p = 1;
      int s_l = 2;
      Node* gp = nullptr;
      Node* p = root_;
      Node* l = smr_read(smr_, tid, root_->left, s_l);
      while (!live(l)->leaf) {
        gp = p;
        p = l;
        int freed_slot = s_gp;
        s_gp = s_p;
        s_p = s_l;
        s_l = freed_slot;
        l = smr_read(smr_, tid, key < p->key ? p->left : p->right, s_l);
        if constexpr (Smr::descriptor.needs_read_hook) {
          if (p->removed.load(std::memory_order_acquire)) goto retry;
        }
      }
      const Key leaf_key = l->key;
      hook();
      if (read_only)
        smr_.end_read(tid, {});
      else if (for_insert)
        smr_.end_read(tid, {p, l});
      else
        smr_.end_read(tid, {gp, p, l});
      return {gp, p, l, leaf_key};
    }
  }

  Smr& smr_;
  Node* root_;
  PerThread<Node*> spare_leaf_;
  PerThread<Node*> spare_inner_;
};

}  // namespace reclaim
