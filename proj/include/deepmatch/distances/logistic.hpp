#pragma once

#include <optional>
#include <span>

#include "deepmatch/numerics/dense.hpp"

namespace deepmatch {

enum class SolverStatus { Converged, Saturated, NotConverged };

const char* status_name(SolverStatus s);

struct LogisticOptions {
    double gradient_tolerance = 1e-10;
    int max_iterations = 500;
    /// Parameter norm beyond which the fit is treated as running off to
    /// infinity (separable or quasi-separable data with no ridge).
    double divergence_norm = 1e8;
    /// Starting point (intercept, coefficients...). Zero when empty.
    std::optional<DenseVector> warm_start;
};

struct LogisticFit {
    double intercept = 0.0;
    DenseVector coef;
    /// sum_i w_i l(s_i (c + d'x_i)) - ridge/2 |d|^2
    double objective = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    SolverStatus status = SolverStatus::NotConverged;
};

/// Maximizes the weighted, ridge-penalized logistic log-likelihood
///   sum_i w_i l(s_i (c + d'x_i)) - (ridge/2) |d|^2
/// over an unpenalized intercept c and slopes d, with labels s_i in {-1, +1}.
/// Damped Newton with backtracking. With ridge = 0 and separable data the
/// iterates diverge; the solver stops at `divergence_norm` and reports
/// Saturated when the objective has reached sum(w) log 2, NotConverged
/// otherwise.
LogisticFit fit_weighted_logistic(const DenseMatrix& x, std::span<const double> labels,
                                  std::span<const double> weights, double ridge,
                                  const LogisticOptions& options = {});

}  // namespace deepmatch
