#include "deepmatch/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "deepmatch/error.hpp"

namespace deepmatch {

GradCheckReport finite_difference_check(const LossFn& loss, std::span<const double> params,
                                        std::span<const double> analytic,
                                        const GradCheckOptions& options) {
    if (params.size() != analytic.size())
        throw DimensionError("finite_difference_check: gradient size mismatch");
    std::vector<double> theta(params.begin(), params.end());
    GradCheckReport report;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + options.step;
        const double up = loss(theta);
        theta[i] = saved - options.step;
        const double down = loss(theta);
        theta[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("finite_difference_check: non-finite loss at coordinate " +
                               std::to_string(i));
        const double numeric = (up - down) / (2.0 * options.step);
        const double denom =
            std::max({std::abs(analytic[i]), std::abs(numeric), options.floor});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > report.max_rel_error || i == 0) {
            report.max_rel_error = std::max(report.max_rel_error, rel);
            if (rel >= report.max_rel_error) {
                report.worst_index = i;
                report.analytic_at_worst = analytic[i];
                report.numeric_at_worst = numeric;
            }
        }
    }
    report.passed = report.max_rel_error < options.tolerance;
    return report;
}

}  // namespace deepmatch
