#pragma once

#include <cstddef>
#include <vector>

#include "osc/random.hpp"

namespace osc {

// Disjoint partition of sample indices [0, n) into training and calibration.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> cal;
};

// Uniformly random split with exactly cal_size calibration points.
SplitIndices random_split(std::size_t n, std::size_t cal_size, RandomSource& rng);

}  // namespace osc
