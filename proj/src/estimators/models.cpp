#include "deepmatch/estimators/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "deepmatch/distances/losses.hpp"
#include "deepmatch/error.hpp"
#include "deepmatch/numerics/adam.hpp"

namespace deepmatch {
namespace {

double affine(double intercept, const DenseVector& coef, std::span<const double> x) {
    if (static_cast<Eigen::Index>(x.size()) != coef.size())
        throw DimensionError("model expects " + std::to_string(coef.size()) + " covariates");
    double z = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) z += coef[static_cast<Eigen::Index>(j)] * x[j];
    return z;
}

void check_neural_config(const NeuralFitConfig& c, std::size_t dim) {
    if (c.architecture.input_size() != dim)
        throw DimensionError("network input size does not match the covariates");
    if (c.architecture.layers.empty() ||
        c.architecture.layers.back().activation != Activation::Identity)
        throw PreconditionError("fitted networks need an identity output unit");
    if (c.epochs < 1 || c.batch_size == 0 || !(c.learning_rate > 0.0))
        throw PreconditionError("neural fit needs epochs, batch size and rate > 0");
}

// Mini-batch Adam on sum_i loss_i(net(x_i)); `slope(i, out)` is dloss_i/dout.
template <class Loss, class Slope>
Network train(const Dataset& data, std::span<const std::size_t> units, const NeuralFitConfig& c,
              Loss loss, Slope slope, FitDiagnostics& diag) {
    RngStream rng(c.seed, c.stream);
    Network net(c.architecture);
    net.initialize(rng);
    AdamState adam(net.num_params());
    std::vector<double> grad(net.num_params());
    std::vector<std::size_t> order(units.begin(), units.end());
    ForwardCache cache;
    int steps = 0;
    for (int epoch = 0; epoch < c.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += c.batch_size) {
            const std::size_t stop = std::min(order.size(), start + c.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                const double out = forward(net, data.row(i), cache);
                backward(net, cache, slope(i, out) / static_cast<double>(stop - start), grad);
            }
            adam_step(net.params(), grad, adam, c.learning_rate);
            ++steps;
        }
    }
    double total = 0.0;
    for (std::size_t i : units) total += loss(i, forward(net, data.row(i)));
    diag.final_loss = total / static_cast<double>(units.size());
    diag.iterations = steps;
    diag.status = std::isfinite(diag.final_loss) ? SolverStatus::Converged
                                                 : SolverStatus::NotConverged;
    if (!std::isfinite(diag.final_loss)) throw NumericError("neural fit produced a non-finite loss");
    return net;
}

}  // namespace

double PropensityModel::logit(std::span<const double> x) const {
    if (net_) return forward(*net_, x);
    return affine(intercept_, coef_, x);
}

double PropensityModel::score(std::span<const double> x) const {
    return std::clamp(sigmoid(logit(x)), kPropensityClamp, 1.0 - kPropensityClamp);
}

PropensityModel PropensityModel::logistic(double intercept, DenseVector coef, FitDiagnostics d) {
    PropensityModel m;
    m.kind_ = PropensityKind::Logistic;
    m.intercept_ = intercept;
    m.coef_ = std::move(coef);
    m.diag_ = d;
    return m;
}

PropensityModel PropensityModel::neural(Network net, FitDiagnostics d) {
    PropensityModel m;
    m.kind_ = PropensityKind::Neural;
    m.net_.emplace(std::move(net));
    m.diag_ = d;
    return m;
}

double OutcomeModel::predict(std::span<const double> x) const {
    if (net_) return forward(*net_, x);
    return affine(intercept_, coef_, x);
}

OutcomeModel OutcomeModel::linear(double intercept, DenseVector coef, FitDiagnostics d) {
    OutcomeModel m;
    m.kind_ = OutcomeKind::Ols;
    m.intercept_ = intercept;
    m.coef_ = std::move(coef);
    m.diag_ = d;
    return m;
}

OutcomeModel OutcomeModel::neural(Network net, FitDiagnostics d) {
    OutcomeModel m;
    m.kind_ = OutcomeKind::Neural;
    m.net_.emplace(std::move(net));
    m.diag_ = d;
    return m;
}

OutcomeModel OutcomeModel::zero(std::size_t dim) {
    return linear(0.0, DenseVector::Zero(static_cast<Eigen::Index>(dim)),
                  FitDiagnostics{SolverStatus::Converged, 0, 0.0});
}

std::pair<double, DenseVector> least_squares(const DenseMatrix& x, std::span<const double> y,
                                             std::span<const double> weights, double ridge) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols() + 1;
    if (static_cast<Eigen::Index>(y.size()) != n ||
        (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != n))
        throw DimensionError("least squares: row counts differ");
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    DenseVector rhs = DenseVector::Zero(p);
    DenseVector row(p);
    row[0] = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
        row.tail(p - 1) = x.row(i).transpose();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
        rhs += (w * y[static_cast<std::size_t>(i)]) * row;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += ridge;
    const DenseVector beta = gram.ldlt().solve(rhs);
    if (!beta.allFinite()) throw NumericError("least squares: singular system");
    return {beta[0], beta.tail(p - 1)};
}

PropensityModel fit_propensity(const Dataset& data, PropensityKind kind,
                               const NeuralFitConfig& config) {
    data.require_both_arms();
    if (kind == PropensityKind::Logistic) {
        std::vector<double> labels(data.size()), w(data.size(), 1.0);
        for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data.treated(i) ? 1.0 : -1.0;
        const LogisticFit fit = fit_weighted_logistic(data.x(), labels, w, 0.0);
        return PropensityModel::logistic(
            fit.intercept, fit.coef,
            FitDiagnostics{fit.status, fit.iterations,
                           std::numbers::ln2 - fit.objective / static_cast<double>(data.size())});
    }
    check_neural_config(config, data.dim());
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    FitDiagnostics diag;
    // Log-loss of sigmoid(s g) with s = +-1: -log sigmoid(s g).
    auto loss = [&](std::size_t i, double g) {
        return -(link_loss((data.treated(i) ? 1.0 : -1.0) * g) - std::numbers::ln2);
    };
    auto slope = [&](std::size_t i, double g) {
        const double s = data.treated(i) ? 1.0 : -1.0;
        return -s * link_loss_slope(s * g);
    };
    Network net = train(data, all, config, loss, slope, diag);
    return PropensityModel::neural(std::move(net), diag);
}

OutcomeModel fit_outcome(const Dataset& data, OutcomeKind kind, const NeuralFitConfig& config) {
    const auto y = data.y();
    if (data.n_control() == 0) throw PreconditionError("outcome model needs control units");
    const auto ctrl = data.control_indices();
    if (kind == OutcomeKind::Ols) {
        const DenseMatrix xc = data.arm_points(false);
        std::vector<double> yc(ctrl.size());
        for (std::size_t k = 0; k < ctrl.size(); ++k) yc[k] = y[ctrl[k]];
        auto [a, b] = least_squares(xc, yc);
        return OutcomeModel::linear(a, std::move(b), FitDiagnostics{SolverStatus::Converged, 1, 0.0});
    }
    check_neural_config(config, data.dim());
    FitDiagnostics diag;
    auto loss = [&](std::size_t i, double f) { return 0.5 * (f - y[i]) * (f - y[i]); };
    auto slope = [&](std::size_t i, double f) { return f - y[i]; };
    Network net = train(data, ctrl, config, loss, slope, diag);
    return OutcomeModel::neural(std::move(net), diag);
}

}  // namespace deepmatch
