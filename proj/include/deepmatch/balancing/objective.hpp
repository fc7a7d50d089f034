#pragma once

#include <span>

#include "deepmatch/balancing/weights.hpp"
#include "deepmatch/distances/distance.hpp"
#include "deepmatch/estimators/dataset.hpp"

namespace deepmatch {

/// Treated sample {(1/n1, X_i)}.
WeightedSample treated_sample(const Dataset& data);

/// Control sample {(W_i / n1, X_i)} for treated-count weights (W_i for
/// unit-sum weights: both describe the same weighted set).
WeightedSample control_sample(const Dataset& data, const BalanceWeights& w);

/// DD^2(treated, reweighted control) + (lambda / n1^2) sum W_i^2 with W in
/// the treated-count convention (other conventions are rescaled first).
double objective_eval(const BalanceWeights& w, const Dataset& data, const FunctionClass& cls,
                      double psi, double lambda, const DDOptions& options = {});

/// The same objective written on unit-sum weights u = W / n1:
/// DD^2(treated, {(u_i, X_i)}) + lambda sum u_i^2.
double objective_unit_sum(std::span<const double> u, const Dataset& data,
                          const FunctionClass& cls, double psi, double lambda,
                          const DDOptions& options = {});

}  // namespace deepmatch
