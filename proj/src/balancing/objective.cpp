#include "deepmatch/balancing/objective.hpp"

#include "deepmatch/error.hpp"

namespace deepmatch {

WeightedSample treated_sample(const Dataset& data) {
    data.require_both_arms();
    return WeightedSample::uniform(data.arm_points(true),
                                   1.0 / static_cast<double>(data.n_treated()));
}

WeightedSample control_sample(const Dataset& data, const BalanceWeights& w) {
    w.require_matches(data);
    const BalanceWeights u = w.to_unit_sum();
    return WeightedSample(std::vector<double>(u.control().begin(), u.control().end()),
                          data.arm_points(false));
}

double objective_unit_sum(std::span<const double> u, const Dataset& data,
                          const FunctionClass& cls, double psi, double lambda,
                          const DDOptions& options) {
    if (u.size() != data.n_control()) throw DimensionError("one weight per control unit");
    const WeightedSample plus = treated_sample(data);
    const WeightedSample minus(std::vector<double>(u.begin(), u.end()), data.arm_points(false));
    double penalty = 0.0;
    for (double v : u) penalty += v * v;
    return dd(cls, plus, minus, psi, options).squared_value + lambda * penalty;
}

double objective_eval(const BalanceWeights& w, const Dataset& data, const FunctionClass& cls,
                      double psi, double lambda, const DDOptions& options) {
    if (!(lambda >= 0.0)) throw PreconditionError("lambda must be nonnegative");
    w.require_matches(data);
    const BalanceWeights u = w.to_unit_sum();
    return objective_unit_sum(u.control(), data, cls, psi, lambda, options);
}

}  // namespace deepmatch
