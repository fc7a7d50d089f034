#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "deepmatch/distances/logistic.hpp"
#include "deepmatch/estimators/dataset.hpp"
#include "deepmatch/numerics/network.hpp"

namespace deepmatch {

inline constexpr double kPropensityClamp = 1e-6;

/// Adam training of a single-output network on per-unit losses.
struct NeuralFitConfig {
    Architecture architecture;  // output activation must be Identity
    int epochs = 10;
    std::size_t batch_size = 100;
    double learning_rate = 1e-4;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

struct FitDiagnostics {
    SolverStatus status = SolverStatus::NotConverged;
    int iterations = 0;
    double final_loss = 0.0;
};

enum class PropensityKind { Logistic, Neural };
enum class OutcomeKind { Ols, Neural };

/// Fitted score e(x) = sigmoid(g(x)), clamped to [1e-6, 1 - 1e-6].
class PropensityModel {
public:
    PropensityKind kind() const { return kind_; }
    double score(std::span<const double> x) const;
    /// Unclamped logit g(x).
    double logit(std::span<const double> x) const;
    const FitDiagnostics& diagnostics() const { return diag_; }

    static PropensityModel logistic(double intercept, DenseVector coef, FitDiagnostics d = {});
    static PropensityModel neural(Network net, FitDiagnostics d = {});

private:
    PropensityKind kind_ = PropensityKind::Logistic;
    double intercept_ = 0.0;
    DenseVector coef_;
    std::optional<Network> net_;
    FitDiagnostics diag_;
};

/// Fitted control-outcome regression f0(x).
class OutcomeModel {
public:
    OutcomeKind kind() const { return kind_; }
    double predict(std::span<const double> x) const;
    const FitDiagnostics& diagnostics() const { return diag_; }

    static OutcomeModel linear(double intercept, DenseVector coef, FitDiagnostics d = {});
    static OutcomeModel neural(Network net, FitDiagnostics d = {});
    /// The zero function.
    static OutcomeModel zero(std::size_t dim);

    double intercept() const { return intercept_; }
    const DenseVector& coef() const { return coef_; }

private:
    OutcomeKind kind_ = OutcomeKind::Ols;
    double intercept_ = 0.0;
    DenseVector coef_;
    std::optional<Network> net_;
    FitDiagnostics diag_;
};

/// Logistic: unpenalized Newton fit to gradient norm 1e-10 (divergence on
/// separable data is reported in the diagnostics, not thrown). Neural:
/// Adam on the Bernoulli log-loss of sigmoid(g). Needs both arms.
PropensityModel fit_propensity(const Dataset& data, PropensityKind kind,
                               const NeuralFitConfig& config = {});

/// Fitted on the control units only. OLS: normal equations with ridge 1e-10
/// on all coefficients. Neural: Adam on squared error.
OutcomeModel fit_outcome(const Dataset& data, OutcomeKind kind,
                         const NeuralFitConfig& config = {});

/// Least squares of y on [1, x] with ridge `ridge`, optionally weighted.
/// Returns (intercept, slopes).
std::pair<double, DenseVector> least_squares(const DenseMatrix& x, std::span<const double> y,
                                             std::span<const double> weights = {},
                                             double ridge = 1e-10);

}  // namespace deepmatch
