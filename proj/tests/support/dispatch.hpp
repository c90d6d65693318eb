// Compile-time iteration over every (structure, scheme) pair that is allowed.
#pragma once

#include <utility>

#include "reclaim/bench/trial.hpp"

namespace testing_support {

using reclaim::DsKind;
using reclaim::PairingOptions;
using reclaim::SchemeKind;

namespace detail {

template <DsKind D, SchemeKind S, class F>
void visit_one(F& f, PairingOptions opt) {
  if constexpr (reclaim::bench::detail::instantiable(D, S)) {
    if (reclaim::pairing_allowed(D, S, opt)) f.template operator()<D, S>();
  }
}

template <DsKind D, class F, std::size_t... J>
void visit_schemes(F& f, PairingOptions opt, std::index_sequence<J...>) {
  (visit_one<D, reclaim::kAllSchemes[J]>(f, opt), ...);
}

template <class F, std::size_t... I>
void visit_structures(F& f, PairingOptions opt, std::index_sequence<I...>) {
  (visit_schemes<reclaim::kAllStructures[I]>(
       f, opt, std::make_index_sequence<std::size(reclaim::kAllSchemes)>{}),
   ...);
}

}  // namespace detail

/// Calls f.template operator()<D, S>() for each allowed pair.
template <class F>
void for_each_pair(F&& f, PairingOptions opt = {}) {
  detail::visit_structures(f, opt, std::make_index_sequence<std::size(reclaim::kAllStructures)>{});
}

}  // namespace testing_support
