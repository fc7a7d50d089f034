#include "deepmatch/balancing/frank_wolfe.hpp"

#include <cmath>

#include "deepmatch/distances/losses.hpp"
#include "deepmatch/error.hpp"

namespace deepmatch {

BalanceWeights fw_balance(const Dataset& data, const FunctionClass& cls, double lambda,
                          double psi, int iterations, FwTrace* trace) {
    data.require_both_arms();
    if (!std::holds_alternative<SignSlope>(cls) && !std::holds_alternative<LinearBall>(cls))
        throw PreconditionError("fw_balance needs an exact oracle (signslope or linear)");
    if (iterations < 0) throw PreconditionError("iteration count must be nonnegative");
    if (!(lambda >= 0.0)) throw PreconditionError("lambda must be nonnegative");

    const std::size_t n0 = data.n_control();
    const WeightedSample plus = treated_sample(data);
    const DenseMatrix xc = data.arm_points(false);
    std::vector<double> u(n0, 1.0 / static_cast<double>(n0));
    DDOptions options;

    for (int k = 1; k <= iterations; ++k) {
        const WeightedSample minus(u, xc);
        const DDResult r = dd(cls, plus, minus, psi, options);
        if (!r.converged()) throw NumericError("fw_balance: distance oracle did not converge");
        if (const auto* a = std::get_if<AffineDiscriminator>(&r.discriminator);
            a && r.status == SolverStatus::Converged)
            options.warm_start = *a;
        else
            options.warm_start.reset();

        std::size_t best = 0;
        double best_grad = INFINITY;
        double penalty = 0.0;
        for (std::size_t i = 0; i < n0; ++i) {
            const double g = link_loss(-r.score(minus.point(i))) + 2.0 * lambda * u[i];
            if (g < best_grad) {
                best_grad = g;
                best = i;
            }
            penalty += u[i] * u[i];
        }
        if (trace) {
            trace->objective.push_back(r.squared_value + lambda * penalty);
            trace->vertex.push_back(best);
        }
        const double step = 2.0 / (static_cast<double>(k) + 1.0);
        for (double& v : u) v *= 1.0 - step;
        u[best] += step;
    }

    // Scale to sum n1 and absorb the rounding residue of the simplex walk.
    double s = 0.0;
    for (double v : u) s += v;
    const double n1 = static_cast<double>(data.n_treated());
    for (double& v : u) v *= n1 / s;
    return BalanceWeights(std::move(u), WeightConvention::TreatedCount, data.n_treated(),
                          WeightProvenance{"fw"});
}

}  // namespace deepmatch
