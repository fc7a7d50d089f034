#include "deepmatch/estimators/estimators.hpp"

#include <cmath>

#include "deepmatch/error.hpp"

namespace deepmatch {
namespace {

void require_external(const BalanceWeights& w, const Dataset& data) {
    data.require_both_arms();
    w.require_matches(data);
    if (w.convention() == WeightConvention::UnitSum)
        throw PreconditionError("estimators take treated-count or unnormalized weights");
}

DenseMatrix effect_design(const DenseMatrix& xh, const Dataset& data) {
    if (static_cast<std::size_t>(xh.rows()) != data.size())
        throw DimensionError("effect covariates need one row per unit");
    return xh;
}

}  // namespace

double CattModel::effect(std::span<const double> xh) const {
    if (static_cast<Eigen::Index>(xh.size()) != slopes.size())
        throw DimensionError("CATT model dimension mismatch");
    double v = intercept;
    for (std::size_t j = 0; j < xh.size(); ++j) v += slopes[static_cast<Eigen::Index>(j)] * xh[j];
    return v;
}

BalanceWeights ipw_weights(const PropensityModel& model, const Dataset& data, bool normalized) {
    data.require_both_arms();
    std::vector<double> w;
    w.reserve(data.n_control());
    for (std::size_t i : data.control_indices()) {
        const double e = model.score(data.row(i));
        w.push_back(e / (1.0 - e));
    }
    BalanceWeights out(std::move(w), WeightConvention::Unnormalized, data.n_treated(),
                       WeightProvenance{normalized ? "ipwn" : "ipw"});
    return normalized ? out.to_treated_count() : out;
}

double att_weighted(const BalanceWeights& w, const Dataset& data) {
    require_external(w, data);
    const auto y = data.y();
    double treated = 0.0;
    for (std::size_t i : data.treated_indices()) treated += y[i];
    double control = 0.0;
    const auto ctrl = data.control_indices();
    for (std::size_t k = 0; k < ctrl.size(); ++k) control += w[k] * y[ctrl[k]];
    return (treated - control) / static_cast<double>(data.n_treated());
}

double att_dr(const BalanceWeights& w, const Dataset& data, const OutcomeModel& outcome) {
    require_external(w, data);
    const auto y = data.y();
    double acc = 0.0;
    for (std::size_t i : data.treated_indices()) acc += y[i] - outcome.predict(data.row(i));
    const auto ctrl = data.control_indices();
    for (std::size_t k = 0; k < ctrl.size(); ++k)
        acc -= w[k] * (y[ctrl[k]] - outcome.predict(data.row(ctrl[k])));
    return acc / static_cast<double>(data.n_treated());
}

double att_regression(const Dataset& data, const OutcomeModel& outcome) {
    data.require_both_arms();
    const auto y = data.y();
    double acc = 0.0;
    for (std::size_t i : data.treated_indices()) acc += y[i] - outcome.predict(data.row(i));
    return acc / static_cast<double>(data.n_treated());
}

CattModel catt_wls(const BalanceWeights& w, const Dataset& data, const DenseMatrix& xh) {
    require_external(w, data);
    const DenseMatrix design = effect_design(xh, data);
    const auto y = data.y();
    const std::vector<double> full = w.full(data);
    const Eigen::Index p = design.cols() + 1;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    DenseVector rhs = DenseVector::Zero(p);
    DenseVector row(p);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double half = data.treated(i) ? 0.5 : -0.5;
        row[0] = half;
        row.tail(p - 1) = half * design.row(static_cast<Eigen::Index>(i)).transpose();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(row, full[i]);
        rhs += (full[i] * y[i]) * row;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += 1e-10;
    const DenseVector beta = gram.ldlt().solve(rhs);
    if (!beta.allFinite()) throw NumericError("catt_wls: singular system");
    return CattModel{beta[0], beta.tail(p - 1)};
}

CattModel catt_regression(const Dataset& data, const OutcomeModel& outcome,
                          const DenseMatrix& xh) {
    data.require_both_arms();
    const DenseMatrix design = effect_design(xh, data);
    const auto y = data.y();
    const auto tr = data.treated_indices();
    DenseMatrix xt(static_cast<Eigen::Index>(tr.size()), design.cols());
    std::vector<double> r(tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        xt.row(static_cast<Eigen::Index>(k)) = design.row(static_cast<Eigen::Index>(tr[k]));
        r[k] = y[tr[k]] - outcome.predict(data.row(tr[k]));
    }
    auto [a, b] = least_squares(xt, r);
    return CattModel{a, std::move(b)};
}

RiskTerms risk_decomposition(const BalanceWeights& w, const CovariateFn& f0,
                             const CovariateFn& sigma2, const Dataset& data) {
    require_external(w, data);
    const std::vector<double> full = w.full(data);
    double moment = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        moment += (data.treated(i) ? 1.0 : -1.0) * full[i] * f0(x);
        var += full[i] * full[i] * sigma2(x);
    }
    const double n1 = static_cast<double>(data.n_treated());
    return RiskTerms{moment * moment / (n1 * n1), var / (n1 * n1)};
}

}  // namespace deepmatch
