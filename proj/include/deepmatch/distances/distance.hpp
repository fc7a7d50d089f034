#pragma once

// Discriminator families, integral probability metrics, and the
// psi-discriminative distance
//   DD^2 = sup_{f in F, t} sum_{+-} sum_i w_i l(+- t f(x_i)) - psi t^2 / 2.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "deepmatch/distances/logistic.hpp"
#include "deepmatch/distances/weighted_sample.hpp"
#include "deepmatch/error.hpp"
#include "deepmatch/numerics/network.hpp"

namespace deepmatch {

/// x -> +x or x -> -x on scalar points.
struct SignSlope {};

/// x -> a + b'x with |b|_2 <= 1 and a free intercept.
struct LinearBall {};

/// Unit ball of an RKHS; only the IPM (MMD) has a closed form here.
struct KernelSpec {
    enum class Kind { Rbf, Linear };
    Kind kind = Kind::Rbf;
    double bandwidth = 1.0;  // RBF: k(x,y) = exp(-|x-y|^2 / (2 bandwidth^2))
};

struct NeuralTraining {
    int epochs = 20;
    std::size_t batch_size = 100;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Networks of a fixed architecture with the weight-matrix sum of squares as
/// regularizer R; psi acts as weight decay on R.
struct NeuralClass {
    Architecture architecture;
    NeuralTraining training;
};

using FunctionClass = std::variant<SignSlope, LinearBall, KernelSpec, NeuralClass>;

const char* class_name(const FunctionClass& cls);

/// t f(x) = slope * x
struct SlopeDiscriminator {
    double slope = 0.0;
};

/// t f(x) = intercept + coef'x
struct AffineDiscriminator {
    double intercept = 0.0;
    DenseVector coef;
};

struct NeuralDiscriminator {
    Network net;
};

using Discriminator = std::variant<SlopeDiscriminator, AffineDiscriminator, NeuralDiscriminator>;

struct DDResult {
    double value = 0.0;          // sqrt(squared_value)
    double squared_value = 0.0;  // in [0, total weight * log 2]
    double scale = 0.0;          // t
    Discriminator discriminator = SlopeDiscriminator{};
    SolverStatus status = SolverStatus::NotConverged;
    int iterations = 0;

    bool converged() const { return status != SolverStatus::NotConverged; }
    /// t f(x) of the optimal discriminator.
    double score(std::span<const double> x) const;
};

struct DDOptions {
    double slope_gradient_tolerance = 1e-12;
    LogisticOptions logistic;
    /// Warm start for the LinearBall oracle, e.g. from the previous
    /// conditional-gradient iteration.
    std::optional<AffineDiscriminator> warm_start;
};

/// IPM between the two samples. LinearBall with unequal totals is +infinity
/// (the free intercept is unbounded). NeuralClass has no closed form and is
/// rejected with PreconditionError.
double ipm(const FunctionClass& cls, const WeightedSample& plus, const WeightedSample& minus);

/// psi-discriminative distance. Exact for SignSlope (1-D concave search) and
/// LinearBall (ridge logistic regression); a trained lower-bound estimate for
/// NeuralClass; KernelSpec is rejected.
DDResult dd(const FunctionClass& cls, const WeightedSample& plus, const WeightedSample& minus,
            double psi, const DDOptions& options = {});

struct DualOptions {
    int restarts = 8;
    double gradient_tolerance = 1e-9;
    int max_iterations = 500;
    std::uint64_t seed = 7;
};

struct DualResult {
    double value = 0.0;           // minimal dual objective
    std::vector<double> p_plus;   // minimizer, per point of `plus`
    std::vector<double> p_minus;  // minimizer, per point of `minus`
    double restart_spread = 0.0;  // max - min objective across restarts
};

/// Minimizes sum w h(p) + IPM^2(p-reweighted samples) / (2 psi) over
/// p in [0,1]^n. Intended as an independent check on dd(); limited to
/// SignSlope and equal-total LinearBall instances with at most 12 points.
DualResult dd_dual(const FunctionClass& cls, const WeightedSample& plus,
                   const WeightedSample& minus, double psi, const DualOptions& options = {});

struct BoundReport {
    double ipm = 0.0;
    double dd = 0.0;
    double lower = 0.0;  // 2 sqrt(2 psi) dd
    double upper = 0.0;  // max(2 M sqrt(wbar), 4 sqrt(psi)) dd
    double m_bound = 0.0;
    double total_weight = 0.0;

    double lower_slack() const { return ipm - lower; }
    double upper_slack() const { return upper - ipm; }
};

class BoundViolation : public NumericError {
public:
    BoundViolation(const std::string& what, BoundReport report)
        : NumericError(what), report_(report) {}
    const BoundReport& report() const { return report_; }

private:
    BoundReport report_;
};

/// Evaluates both sides of lower <= ipm <= upper. M is max |x| for SignSlope
/// and max |x|_2 for LinearBall (whose samples must have equal totals, so
/// the intercept cancels). Throws BoundViolation beyond `tolerance`.
BoundReport bound_check(const FunctionClass& cls, const WeightedSample& plus,
                        const WeightedSample& minus, double psi, double tolerance = 1e-6);

/// max over sample points of sup_f |f(x)| as used by bound_check.
double discriminator_bound(const FunctionClass& cls, const WeightedSample& plus,
                           const WeightedSample& minus);

}  // namespace deepmatch
