#include "deepmatch/balancing/weights.hpp"

#include <cmath>
#include <numeric>

#include "deepmatch/error.hpp"

namespace deepmatch {

const char* convention_name(WeightConvention c) {
    switch (c) {
        case WeightConvention::UnitSum: return "unit_sum";
        case WeightConvention::TreatedCount: return "treated_count";
        case WeightConvention::Unnormalized: return "unnormalized";
    }
    return "?";
}

BalanceWeights::BalanceWeights(std::vector<double> control, WeightConvention convention,
                               std::size_t n_treated, WeightProvenance provenance)
    : w_(std::move(control)),
      convention_(convention),
      n_treated_(n_treated),
      provenance_(std::move(provenance)) {
    for (double v : w_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw PreconditionError("balance weights must be finite and nonnegative");
    const double s = sum();
    if (convention_ == WeightConvention::UnitSum && std::abs(s - 1.0) > 1e-9)
        throw PreconditionError("unit-sum weights sum to " + std::to_string(s));
    if (convention_ == WeightConvention::TreatedCount) {
        const double n1 = static_cast<double>(n_treated_);
        if (std::abs(s - n1) > 1e-9 * std::max(1.0, n1))
            throw PreconditionError("treated-count weights sum to " + std::to_string(s) +
                                    ", expected " + std::to_string(n_treated_));
    }
}

BalanceWeights BalanceWeights::uniform(const Dataset& data) {
    data.require_both_arms();
    const double each =
        static_cast<double>(data.n_treated()) / static_cast<double>(data.n_control());
    return BalanceWeights(std::vector<double>(data.n_control(), each),
                          WeightConvention::TreatedCount, data.n_treated(),
                          WeightProvenance{"uniform"});
}

double BalanceWeights::sum() const {
    return std::accumulate(w_.begin(), w_.end(), 0.0);
}

BalanceWeights BalanceWeights::to_treated_count() const {
    if (convention_ == WeightConvention::TreatedCount) return *this;
    const double s = sum();
    if (!(s > 0.0)) throw NumericError("cannot normalize weights with zero total");
    std::vector<double> w(w_);
    const double f = static_cast<double>(n_treated_) / s;
    for (double& v : w) v *= f;
    return BalanceWeights(std::move(w), WeightConvention::TreatedCount, n_treated_, provenance_);
}

BalanceWeights BalanceWeights::to_unit_sum() const {
    if (convention_ == WeightConvention::UnitSum) return *this;
    const double s = sum();
    if (!(s > 0.0)) throw NumericError("cannot normalize weights with zero total");
    std::vector<double> w(w_);
    for (double& v : w) v /= s;
    return BalanceWeights(std::move(w), WeightConvention::UnitSum, n_treated_, provenance_);
}

void BalanceWeights::require_matches(const Dataset& data) const {
    if (w_.size() != data.n_control())
        throw DimensionError("weights cover " + std::to_string(w_.size()) +
                             " controls, dataset has " + std::to_string(data.n_control()));
    if (n_treated_ != data.n_treated())
        throw DimensionError("weights were built for a different treated count");
}

std::vector<double> BalanceWeights::full(const Dataset& data) const {
    require_matches(data);
    std::vector<double> out(data.size(), 1.0);
    const auto ctrl = data.control_indices();
    for (std::size_t k = 0; k < ctrl.size(); ++k) out[ctrl[k]] = w_[k];
    return out;
}

}  // namespace deepmatch
