// All schemes plus a kind -> template mapping.
#pragma once

#include "reclaim/smr/ebr.hpp"
#include "reclaim/smr/he.hpp"
#include "reclaim/smr/hp.hpp"
#include "reclaim/smr/leaky.hpp"
#include "reclaim/smr/nbr.hpp"
#include "reclaim/smr/pop.hpp"

namespace reclaim {

template <SchemeKind K, class Alloc>
struct SchemeFor;

template <class A> struct SchemeFor<SchemeKind::none, A> { using type = Leaky<A>; };
template <class A> struct SchemeFor<SchemeKind::ebr, A> { using type = Ebr<A>; };
template <class A> struct SchemeFor<SchemeKind::hp, A> { using type = HazardPointers<A>; };
template <class A> struct SchemeFor<SchemeKind::he, A> { using type = HazardEras<A>; };
template <class A> struct SchemeFor<SchemeKind::pophp, A> { using type = HazardPointersPop<A>; };
template <class A> struct SchemeFor<SchemeKind::pophe, A> { using type = HazardErasPop<A>; };
template <class A> struct SchemeFor<SchemeKind::epochpop, A> { using type = EpochPop<A>; };
template <class A> struct SchemeFor<SchemeKind::nbr, A> { using type = Nbr<A>; };
template <class A> struct SchemeFor<SchemeKind::nbrplus, A> { using type = NbrPlus<A>; };

template <SchemeKind K, class Alloc>
using scheme_t = typename SchemeFor<K, Alloc>::type;

/// Descriptor for a runtime scheme kind.
inline SchemeDescriptor describe(SchemeKind k) {
  using A = GuardAlloc<AllocMode::release>;
  switch (k) {
    case SchemeKind::none: return Leaky<A>::descriptor;
    case SchemeKind::ebr: return Ebr<A>::descriptor;
    case SchemeKind::hp: return HazardPointers<A>::descriptor;
    case SchemeKind::he: return HazardEras<A>::descriptor;
    case SchemeKind::pophp: return HazardPointersPop<A>::descriptor;
    case SchemeKind::pophe: return HazardErasPop<A>::descriptor;
    case SchemeKind::epochpop: return EpochPop<A>::descriptor;
    case SchemeKind::nbr: return Nbr<A>::descriptor;
    case SchemeKind::nbrplus: return NbrPlus<A>::descriptor;
  }
  throw std::invalid_argument("unknown scheme");
}

/// Reclaim threshold that bounds a single thread's bag for robustness checks.
inline std::size_t reclaim_threshold(SchemeKind k, const SmrConfig& cfg) {
  switch (k) {
    case SchemeKind::nbr:
    case SchemeKind::nbrplus: return cfg.nbr_hi_watermark;
    case SchemeKind::pophp:
    case SchemeKind::pophe: return cfg.pop_reclaim_freq;
    default: return cfg.reclaim_freq;
  }
}

}  // namespace reclaim
