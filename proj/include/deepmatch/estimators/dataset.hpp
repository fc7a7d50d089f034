#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "deepmatch/numerics/dense.hpp"

namespace deepmatch {

/// Observational data {(X_i, T_i, Y_i)}: one covariate row per unit, binary
/// treatment, optional observed outcome.
class Dataset {
public:
    /// Throws DimensionError on length mismatches and PreconditionError on
    /// treatment values outside {0,1} or non-finite entries.
    Dataset(DenseMatrix x, std::vector<int> t, std::optional<std::vector<double>> y = {});

    std::size_t size() const { return t_.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
    std::size_t n_treated() const { return treated_.size(); }
    std::size_t n_control() const { return control_.size(); }

    const DenseMatrix& x() const { return x_; }
    std::span<const double> row(std::size_t i) const {
        return row_span(x_, static_cast<Eigen::Index>(i));
    }
    int t(std::size_t i) const { return t_[i]; }
    bool treated(std::size_t i) const { return t_[i] == 1; }
    std::span<const int> treatments() const { return t_; }

    bool has_outcomes() const { return y_.has_value(); }
    /// Throws PreconditionError when outcomes are absent.
    std::span<const double> y() const;
    double y(std::size_t i) const { return y()[i]; }

    /// Unit indices by arm, ascending.
    std::span<const std::size_t> treated_indices() const { return treated_; }
    std::span<const std::size_t> control_indices() const { return control_; }

    /// Throws PreconditionError unless both arms are nonempty.
    void require_both_arms() const;
    void require_outcomes() const { (void)y(); }

    /// Rows of one arm as a matrix, in index order.
    DenseMatrix arm_points(bool treated_arm) const;

    /// Units in the given order (used by permutation-invariance checks).
    Dataset permuted(std::span<const std::size_t> order) const;

private:
    DenseMatrix x_;
    std::vector<int> t_;
    std::optional<std::vector<double>> y_;
    std::vector<std::size_t> treated_;
    std::vector<std::size_t> control_;
};

}  // namespace deepmatch
