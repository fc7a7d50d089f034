#pragma once

#include <functional>
#include <span>

#include "deepmatch/balancing/weights.hpp"
#include "deepmatch/estimators/dataset.hpp"
#include "deepmatch/estimators/models.hpp"

namespace deepmatch {

/// Linear conditional effect tau(x_h) = intercept + slopes' x_h.
struct CattModel {
    double intercept = 0.0;
    DenseVector slopes;

    double effect(std::span<const double> xh) const;
};

/// Control weight e/(1-e) per control unit, clamped score. `normalized`
/// rescales the controls to sum n1 (TreatedCount); otherwise the weights
/// carry the Unnormalized tag.
BalanceWeights ipw_weights(const PropensityModel& model, const Dataset& data,
                           bool normalized = false);

/// (1/n1) [sum_treated Y - sum_control W Y].
double att_weighted(const BalanceWeights& w, const Dataset& data);

/// (1/n1) sum_i (-1)^{1+T_i} W_i (Y_i - f0(X_i)), treated weight 1.
double att_dr(const BalanceWeights& w, const Dataset& data, const OutcomeModel& outcome);

/// Mean over treated units of Y - f0(X).
double att_regression(const Dataset& data, const OutcomeModel& outcome);

/// Weighted least squares of Y on ((2T-1)/2) [1, X^H], treated weight 1,
/// ridge 1e-10. `xh` holds one row of effect covariates per unit (may have
/// zero columns for an intercept-only effect).
CattModel catt_wls(const BalanceWeights& w, const Dataset& data, const DenseMatrix& xh);

/// Least squares over treated units of Y - f0(X) on [1, X^H].
CattModel catt_regression(const Dataset& data, const OutcomeModel& outcome,
                          const DenseMatrix& xh);

struct RiskTerms {
    double bias2 = 0.0;     // (1/n1^2) (sum (-1)^{1+T} W f0)^2
    double variance = 0.0;  // (1/n1^2) sum_i W_i^2 sigma0^2(X_i), treated W = 1
    double total() const { return bias2 + variance; }
};

using CovariateFn = std::function<double(std::span<const double>)>;

/// Conditional mean squared error of att_weighted against the sample ATT
/// when Y(0) = f0(X) + noise with variance sigma0^2(X), given X and T.
RiskTerms risk_decomposition(const BalanceWeights& w, const CovariateFn& f0,
                             const CovariateFn& sigma2, const Dataset& data);

}  // namespace deepmatch
