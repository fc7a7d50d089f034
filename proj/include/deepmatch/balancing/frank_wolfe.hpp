#pragma once

#include <vector>

#include "deepmatch/balancing/objective.hpp"

namespace deepmatch {

struct FwTrace {
    std::vector<double> objective;  // unit-sum objective before each step
    std::vector<std::size_t> vertex;
};

/// Conditional gradient on the unit simplex for the balancing objective,
/// starting from uniform weights; K steps with step size 2/(k+1). The vertex
/// rule uses the Danskin gradient l(-t f(X_i)) + 2 lambda u_i of the unit-sum
/// objective, lowest index on ties. Output is in the treated-count
/// convention. Needs an exact oracle (SignSlope or LinearBall).
BalanceWeights fw_balance(const Dataset& data, const FunctionClass& cls, double lambda,
                          double psi, int iterations, FwTrace* trace = nullptr);

}  // namespace deepmatch
