#include "deepmatch/distances/weighted_sample.hpp"

#include <cmath>
#include <string>

#include "deepmatch/error.hpp"

namespace deepmatch {

WeightedSample::WeightedSample(std::vector<double> weights, DenseMatrix points)
    : weights_(std::move(weights)), points_(std::move(points)) {
    if (static_cast<Eigen::Index>(weights_.size()) != points_.rows())
        throw DimensionError("weighted sample: " + std::to_string(weights_.size()) +
                             " weights for " + std::to_string(points_.rows()) + " points");
    bool any_positive = false;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0)
            throw PreconditionError("weighted sample: weights must be finite and nonnegative");
        any_positive = any_positive || w > 0.0;
        total_ += w;
    }
    if (!any_positive) throw PreconditionError("weighted sample: no positive weight");
    if (!points_.allFinite()) throw PreconditionError("weighted sample: non-finite point");
}

WeightedSample WeightedSample::uniform(DenseMatrix points, double weight_each) {
    std::vector<double> w(static_cast<std::size_t>(points.rows()), weight_each);
    return WeightedSample(std::move(w), std::move(points));
}

WeightedSample WeightedSample::scaled(double factor) const {
    if (!(factor > 0.0)) throw PreconditionError("weighted sample: scale must be positive");
    std::vector<double> w(weights_);
    for (double& x : w) x *= factor;
    return WeightedSample(std::move(w), points_);
}

}  // namespace deepmatch
