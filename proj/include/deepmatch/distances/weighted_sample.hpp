#pragma once

#include <span>
#include <vector>

#include "deepmatch/numerics/dense.hpp"

namespace deepmatch {

/// A finite set of weighted points {(w_i, x_i)}; one point per row.
class WeightedSample {
public:
    /// Throws PreconditionError on negative or non-finite weights, when no
    /// weight is positive, or on non-finite coordinates.
    WeightedSample(std::vector<double> weights, DenseMatrix points);

    /// Every point carries the same weight.
    static WeightedSample uniform(DenseMatrix points, double weight_each);

    std::size_t size() const { return weights_.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
    double weight(std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }
    std::span<const double> point(std::size_t i) const {
        return row_span(points_, static_cast<Eigen::Index>(i));
    }
    const DenseMatrix& points() const { return points_; }
    double total_weight() const { return total_; }

    /// Same points, every weight multiplied by `factor` > 0.
    WeightedSample scaled(double factor) const;

private:
    std::vector<double> weights_;
    DenseMatrix points_;
    double total_ = 0.0;
};

}  // namespace deepmatch
