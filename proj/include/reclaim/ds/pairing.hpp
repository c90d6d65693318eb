// Which schemes each structure can be used with.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "reclaim/ds/common.hpp"

namespace reclaim {

class InvalidPairing : public std::invalid_argument {
 public:
  InvalidPairing(DsKind ds, SchemeKind s)
      : std::invalid_argument(std::string(to_string(ds)) + " cannot be paired with " +
                              std::string(to_string(s))) {}
};

struct PairingOptions {
  /// Allows the era schemes on the Harris list. Their reservations do not
  /// cover nodes reached through a chain of already-unlinked marked nodes, so
  /// this is off unless explicitly requested.
  bool harris_hazard_eras = false;
};

inline bool pairing_allowed(DsKind ds, SchemeKind s, PairingOptions opt = {}) {
  switch (ds) {
    case DsKind::lazy_list:
      // Marked nodes stay traversable, so a hazard pointer or era cannot be
      // validated against the predecessor. EpochPOP is fine because its
      // fallback scan only needs predecessor-unmarked validation, which the
      // list performs on that path.
      return s == SchemeKind::none || s == SchemeKind::ebr || s == SchemeKind::nbr ||
             s == SchemeKind::nbrplus || s == SchemeKind::epochpop;
    case DsKind::harris_list:
      if (s == SchemeKind::he || s == SchemeKind::pophe) return opt.harris_hazard_eras;
      return s == SchemeKind::none || s == SchemeKind::ebr || s == SchemeKind::nbr ||
             s == SchemeKind::nbrplus;
    case DsKind::hm_list:
    case DsKind::hash_table:
    case DsKind::ext_bst:
      return true;
  }
  return false;
}

inline void require_pairing(DsKind ds, SchemeKind s, PairingOptions opt = {}) {
  if (!pairing_allowed(ds, s, opt)) throw InvalidPairing(ds, s);
}

inline std::vector<SchemeKind> schemes_for(DsKind ds, PairingOptions opt = {}) {
  std::vector<SchemeKind> out;
  for (SchemeKind s : kAllSchemes)
    if (pairing_allowed(ds, s, opt)) out.push_back(s);
  return out;
}

}  // namespace reclaim
