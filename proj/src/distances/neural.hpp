#pragma once

#include "deepmatch/distances/distance.hpp"

namespace deepmatch::detail {

DDResult dd_neural(const NeuralClass& cls, const WeightedSample& plus,
                   const WeightedSample& minus, double psi);

}  // namespace deepmatch::detail
