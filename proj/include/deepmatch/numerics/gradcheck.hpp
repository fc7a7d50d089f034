#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace deepmatch {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    bool passed = false;
};

struct GradCheckOptions {
    double step = 1e-4;
    double tolerance = 1e-5;
    // Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
    // near-zero coordinates from reporting pure round-off.
    double floor = 1e-2;
};

using LossFn = std::function<double(std::span<const double>)>;

/// Compares `analytic` against central differences of `loss` around `params`,
/// coordinate by coordinate. Throws NumericError on a non-finite loss.
GradCheckReport finite_difference_check(const LossFn& loss, std::span<const double> params,
                                        std::span<const double> analytic,
                                        const GradCheckOptions& options = {});

}  // namespace deepmatch
