#include "deepmatch/estimators/dataset.hpp"

#include <cmath>
#include <string>

#include "deepmatch/error.hpp"

namespace deepmatch {

Dataset::Dataset(DenseMatrix x, std::vector<int> t, std::optional<std::vector<double>> y)
    : x_(std::move(x)), t_(std::move(t)), y_(std::move(y)) {
    if (static_cast<std::size_t>(x_.rows()) != t_.size())
        throw DimensionError("dataset: " + std::to_string(x_.rows()) + " covariate rows but " +
                             std::to_string(t_.size()) + " treatments");
    if (y_ && y_->size() != t_.size())
        throw DimensionError("dataset: outcome length does not match the unit count");
    if (!x_.allFinite()) throw PreconditionError("dataset: non-finite covariates");
    for (std::size_t i = 0; i < t_.size(); ++i) {
        if (t_[i] != 0 && t_[i] != 1)
            throw PreconditionError("dataset: treatment of unit " + std::to_string(i) +
                                    " is not 0 or 1");
        (t_[i] == 1 ? treated_ : control_).push_back(i);
    }
    if (y_)
        for (double v : *y_)
            if (!std::isfinite(v)) throw PreconditionError("dataset: non-finite outcome");
}

std::span<const double> Dataset::y() const {
    if (!y_) throw PreconditionError("dataset has no outcomes");
    return *y_;
}

void Dataset::require_both_arms() const {
    if (treated_.empty()) throw PreconditionError("dataset has no treated units");
    if (control_.empty()) throw PreconditionError("dataset has no control units");
}

DenseMatrix Dataset::arm_points(bool treated_arm) const {
    const auto& idx = treated_arm ? treated_ : control_;
    DenseMatrix out(static_cast<Eigen::Index>(idx.size()), x_.cols());
    for (std::size_t r = 0; r < idx.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = x_.row(static_cast<Eigen::Index>(idx[r]));
    return out;
}

Dataset Dataset::permuted(std::span<const std::size_t> order) const {
    if (order.size() != size()) throw DimensionError("permutation length mismatch");
    DenseMatrix x(x_.rows(), x_.cols());
    std::vector<int> t(size());
    std::optional<std::vector<double>> y;
    if (y_) y.emplace(size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = x_.row(static_cast<Eigen::Index>(order[r]));
        t[r] = t_[order[r]];
        if (y_) (*y)[r] = (*y_)[order[r]];
    }
    return Dataset(std::move(x), std::move(t), std::move(y));
}

}  // namespace deepmatch
