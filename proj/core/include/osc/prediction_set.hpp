#pragma once

#include <algorithm>
#include <vector>

#include "osc/dataset.hpp"

namespace osc {

// A finite set of previously seen labels plus an optional catch-all "joker"
// standing in for every label never observed in the reference data.
struct PredictionSet {
  std::vector<Label> seen;  // sorted ascending
  bool joker = false;

  bool contains(Label y) const {
    return std::binary_search(seen.begin(), seen.end(), y);
  }
  bool operator==(const PredictionSet&) const = default;
};

// |seen| plus one if the joker is included.
inline std::size_t cardinality(const PredictionSet& set) {
  return set.seen.size() + (set.joker ? 1 : 0);
}

}  // namespace osc
