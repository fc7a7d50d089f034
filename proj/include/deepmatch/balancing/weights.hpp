#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deepmatch/estimators/dataset.hpp"

namespace deepmatch {

/// How control weights are normalized.
enum class WeightConvention {
    UnitSum,       // sum 1 (conditional-gradient internals)
    TreatedCount,  // sum n1 (the estimator convention)
    Unnormalized,  // no constraint (plain inverse-propensity odds)
};

const char* convention_name(WeightConvention c);

struct WeightProvenance {
    std::string algorithm = "manual";
    std::uint64_t config_hash = 0;
    double phi = 0.0;
    int run = -1;
};

/// Nonnegative weights over the control units of a dataset, indexed by
/// control position (the order of Dataset::control_indices()).
class BalanceWeights {
public:
    /// Throws PreconditionError on negative/non-finite weights or when the
    /// sum violates the convention (tolerance 1e-9; for TreatedCount the
    /// tolerance is relative to n1). `n_treated` is the n1 the weights refer to.
    BalanceWeights(std::vector<double> control, WeightConvention convention,
                   std::size_t n_treated, WeightProvenance provenance = {});

    /// n1/n0 on every control unit.
    static BalanceWeights uniform(const Dataset& data);

    std::size_t size() const { return w_.size(); }
    std::span<const double> control() const { return w_; }
    double operator[](std::size_t k) const { return w_[k]; }
    WeightConvention convention() const { return convention_; }
    std::size_t n_treated() const { return n_treated_; }
    const WeightProvenance& provenance() const { return provenance_; }
    double sum() const;

    /// Same weights rescaled to sum n1 (Unnormalized sums must be positive).
    BalanceWeights to_treated_count() const;
    BalanceWeights to_unit_sum() const;

    /// Length-n vector: treated units 1, controls their weight. Requires the
    /// weights to match the dataset's arm sizes.
    std::vector<double> full(const Dataset& data) const;
    /// Throws DimensionError unless size and n1 match `data`.
    void require_matches(const Dataset& data) const;

private:
    std::vector<double> w_;
    WeightConvention convention_;
    std::size_t n_treated_;
    WeightProvenance provenance_;
};

}  // namespace deepmatch
