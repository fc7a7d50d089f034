#include "deepmatch/distances/logistic.hpp"

#include <cmath>
#include <numbers>

#include "deepmatch/distances/losses.hpp"
#include "deepmatch/error.hpp"

namespace deepmatch {

const char* status_name(SolverStatus s) {
    switch (s) {
        case SolverStatus::Converged: return "converged";
        case SolverStatus::Saturated: return "saturated";
        case SolverStatus::NotConverged: return "not_converged";
    }
    return "?";
}

namespace {

struct Evaluation {
    double objective;
    DenseVector gradient;
    Eigen::MatrixXd neg_hessian;
};

class LogisticProblem {
public:
    LogisticProblem(const DenseMatrix& x, std::span<const double> labels,
                    std::span<const double> weights, double ridge)
        : x_(x), labels_(labels), weights_(weights), ridge_(ridge), p_(x.cols() + 1) {}

    Eigen::Index size() const { return p_; }

    double objective(const DenseVector& theta) const {
        const auto d = theta.tail(p_ - 1);
        double total = 0.0;
        for (Eigen::Index i = 0; i < x_.rows(); ++i) {
            const double w = weights_[static_cast<std::size_t>(i)];
            if (w == 0.0) continue;
            const double z = theta[0] + x_.row(i).dot(d);
            total += w * link_loss(labels_[static_cast<std::size_t>(i)] * z);
        }
        return total - 0.5 * ridge_ * d.squaredNorm();
    }

    Evaluation evaluate(const DenseVector& theta) const {
        Evaluation e{0.0, DenseVector::Zero(p_), Eigen::MatrixXd::Zero(p_, p_)};
        const auto d = theta.tail(p_ - 1);
        DenseVector row(p_);
        row[0] = 1.0;
        for (Eigen::Index i = 0; i < x_.rows(); ++i) {
            const double w = weights_[static_cast<std::size_t>(i)];
            if (w == 0.0) continue;
            const double s = labels_[static_cast<std::size_t>(i)];
            row.tail(p_ - 1) = x_.row(i).transpose();
            const double z = s * (theta[0] + x_.row(i).dot(d));
            e.objective += w * link_loss(z);
            e.gradient += (w * s * link_loss_slope(z)) * row;
            e.neg_hessian.selfadjointView<Eigen::Lower>().rankUpdate(
                row, -w * link_loss_curvature(z));
        }
        e.neg_hessian = e.neg_hessian.selfadjointView<Eigen::Lower>();
        e.objective -= 0.5 * ridge_ * d.squaredNorm();
        e.gradient.tail(p_ - 1) -= ridge_ * d;
        e.neg_hessian.diagonal().tail(p_ - 1).array() += ridge_;
        return e;
    }

private:
    const DenseMatrix& x_;
    std::span<const double> labels_;
    std::span<const double> weights_;
    double ridge_;
    Eigen::Index p_;
};

}  // namespace

LogisticFit fit_weighted_logistic(const DenseMatrix& x, std::span<const double> labels,
                                  std::span<const double> weights, double ridge,
                                  const LogisticOptions& options) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (labels.size() != n || weights.size() != n)
        throw DimensionError("fit_weighted_logistic: labels/weights do not match points");
    if (!(ridge >= 0.0) || !std::isfinite(ridge))
        throw PreconditionError("fit_weighted_logistic: ridge must be finite and >= 0");
    double total_weight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 1.0 && labels[i] != -1.0)
            throw PreconditionError("fit_weighted_logistic: labels must be +1 or -1");
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
            throw PreconditionError("fit_weighted_logistic: weights must be finite and >= 0");
        total_weight += weights[i];
    }
    if (!x.allFinite()) throw NumericError("fit_weighted_logistic: non-finite covariates");

    LogisticProblem problem(x, labels, weights, ridge);
    DenseVector theta = DenseVector::Zero(problem.size());
    if (options.warm_start && options.warm_start->size() == problem.size() &&
        options.warm_start->allFinite())
        theta = *options.warm_start;

    const double ceiling = total_weight * std::numbers::ln2;
    LogisticFit fit;
    Evaluation e = problem.evaluate(theta);
    bool diverged = false;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        if (e.gradient.norm() < options.gradient_tolerance) break;
        // Levenberg damping keeps the system solvable when the curvature
        // vanishes (rank-deficient points or separated data).
        const double damping = 1e-12 * (1.0 + e.neg_hessian.diagonal().cwiseAbs().maxCoeff());
        Eigen::MatrixXd h = e.neg_hessian;
        h.diagonal().array() += damping;
        DenseVector step = h.ldlt().solve(e.gradient);
        if (!step.allFinite() || step.dot(e.gradient) <= 0.0) step = e.gradient;

        const double slope = step.dot(e.gradient);
        double alpha = 1.0;
        bool accepted = false;
        // Close to the optimum the predicted gain is below the round-off of
        // the objective, so the sufficient-increase test cannot discriminate.
        if (slope <= 1e-13 * (1.0 + std::abs(e.objective))) {
            const DenseVector trial = theta + step;
            if (std::isfinite(problem.objective(trial))) {
                theta = trial;
                accepted = true;
            }
        }
        for (int k = 0; k < 60 && !accepted; ++k) {
            const DenseVector trial = theta + alpha * step;
            const double value = problem.objective(trial);
            if (std::isfinite(value) && value >= e.objective + 1e-4 * alpha * slope) {
                theta = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        e = problem.evaluate(theta);
        if (theta.norm() > options.divergence_norm) {
            diverged = true;
            ++it;
            break;
        }
    }

    fit.intercept = theta[0];
    fit.coef = theta.tail(problem.size() - 1);
    fit.objective = e.objective;
    fit.gradient_norm = e.gradient.norm();
    fit.iterations = it;
    if (!std::isfinite(fit.objective)) throw NumericError("fit_weighted_logistic: diverged");
    if (ridge == 0.0 && ceiling - fit.objective <= 1e-8 * ceiling) {
        fit.status = SolverStatus::Saturated;
    } else if (fit.gradient_norm < options.gradient_tolerance && !diverged) {
        fit.status = SolverStatus::Converged;
    } else {
        fit.status = SolverStatus::NotConverged;
    }
    return fit;
}

}  // namespace deepmatch
