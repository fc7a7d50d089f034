#pragma once

#include <vector>

#include "deepmatch/estimators/dataset.hpp"

namespace deepmatch {

struct PenalizedResult {
    std::vector<double> weights;  // W, control order, not normalized
    double objective = 0.0;
    double weight_sum = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// The weight-sum-free problem for a fixed multiplier phi with the affine
/// discriminator class:
///   min_{W >= 0} DD^2(treated, {(W_i/n1, X_i)}) + sum_i (lambda W_i^2/n1^2 + phi W_i/n1),
/// by projected gradient with Armijo backtracking. Needs psi > 0 so the
/// distance is differentiable in W. Negative phi is accepted when
/// lambda > 0 (the quadratic keeps the problem bounded); the multiplier of
/// the sum constraint can take either sign. Stops when the projected step
/// moves less than `tolerance`.
PenalizedResult penalized_weights(const Dataset& data, double psi, double lambda, double phi,
                                  int max_iterations = 5000, double tolerance = 1e-10);

}  // namespace deepmatch
