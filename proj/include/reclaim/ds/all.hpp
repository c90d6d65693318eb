#pragma once

#include "reclaim/ds/ext_bst.hpp"
#include "reclaim/ds/harris_list.hpp"
#include "reclaim/ds/hash_table.hpp"
#include "reclaim/ds/hm_list.hpp"
#include "reclaim/ds/lazy_list.hpp"
#include "reclaim/ds/pairing.hpp"

namespace reclaim {

template <DsKind K, class Smr>
struct StructureFor;

template <class S> struct StructureFor<DsKind::lazy_list, S> { using type = LazyList<S>; };
template <class S> struct StructureFor<DsKind::harris_list, S> { using type = HarrisList<S>; };
template <class S> struct StructureFor<DsKind::hm_list, S> { using type = HmList<S>; };
template <class S> struct StructureFor<DsKind::hash_table, S> { using type = HashTable<S>; };
template <class S> struct StructureFor<DsKind::ext_bst, S> { using type = ExtBst<S>; };

template <DsKind K, class Smr>
using structure_t = typename StructureFor<K, Smr>::type;

/// Default key range for each structure at full scale.
inline std::size_t default_key_range(DsKind k) {
  switch (k) {
    case DsKind::lazy_list:
    case DsKind::harris_list:
    case DsKind::hm_list: return 2000;
    case DsKind::hash_table: return 12288;
    case DsKind::ext_bst: return 2000000;
  }
  return 2000;
}

}  // namespace reclaim
