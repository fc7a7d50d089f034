#include "deepmatch/distances/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "deepmatch/distances/losses.hpp"
#include "neural.hpp"

namespace deepmatch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_dim(const WeightedSample& plus, const WeightedSample& minus) {
    if (plus.dim() != minus.dim())
        throw DimensionError("samples have dimensions " + std::to_string(plus.dim()) + " and " +
                             std::to_string(minus.dim()));
}

bool equal_totals(const WeightedSample& plus, const WeightedSample& minus) {
    const double a = plus.total_weight();
    const double b = minus.total_weight();
    return std::abs(a - b) <= 1e-9 * std::max(a, b);
}

// sum_+ w x - sum_- w x
DenseVector signed_moment(const WeightedSample& plus, const WeightedSample& minus) {
    DenseVector m = DenseVector::Zero(static_cast<Eigen::Index>(plus.dim()));
    for (std::size_t i = 0; i < plus.size(); ++i)
        m += plus.weight(i) * plus.points().row(static_cast<Eigen::Index>(i)).transpose();
    for (std::size_t i = 0; i < minus.size(); ++i)
        m -= minus.weight(i) * minus.points().row(static_cast<Eigen::Index>(i)).transpose();
    return m;
}

double kernel_value(const KernelSpec& k, std::span<const double> a, std::span<const double> b) {
    if (k.kind == KernelSpec::Kind::Linear) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
        return s;
    }
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    return std::exp(-d2 / (2.0 * k.bandwidth * k.bandwidth));
}

double mmd(const KernelSpec& k, const WeightedSample& plus, const WeightedSample& minus) {
    if (k.kind == KernelSpec::Kind::Rbf && !(k.bandwidth > 0.0))
        throw PreconditionError("RBF bandwidth must be positive");
    std::vector<double> s;
    std::vector<std::span<const double>> pts;
    for (std::size_t i = 0; i < plus.size(); ++i) {
        s.push_back(plus.weight(i));
        pts.push_back(plus.point(i));
    }
    for (std::size_t i = 0; i < minus.size(); ++i) {
        s.push_back(-minus.weight(i));
        pts.push_back(minus.point(i));
    }
    double q = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        q += s[i] * s[i] * kernel_value(k, pts[i], pts[i]);
        for (std::size_t j = 0; j < i; ++j) q += 2.0 * s[i] * s[j] * kernel_value(k, pts[i], pts[j]);
    }
    return std::sqrt(std::max(q, 0.0));
}

// Signed scalar problem g(u) = sum w l(u z) - psi u^2 / 2 with z = +-x.
struct SlopeProblem {
    std::vector<double> w;
    std::vector<double> z;
    double psi;

    double value(double u) const {
        double g = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) g += w[i] * link_loss(u * z[i]);
        return g - 0.5 * psi * u * u;
    }
    double slope(double u) const {
        double g = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) g += w[i] * z[i] * link_loss_slope(u * z[i]);
        return g - psi * u;
    }
};

DDResult finish(double squared, double scale, Discriminator disc, SolverStatus status,
                int iterations) {
    DDResult r;
    r.squared_value = std::max(squared, 0.0);
    r.value = std::sqrt(r.squared_value);
    r.scale = scale;
    r.discriminator = std::move(disc);
    r.status = status;
    r.iterations = iterations;
    return r;
}

DDResult dd_sign_slope(const WeightedSample& plus, const WeightedSample& minus, double psi,
                       const DDOptions& options) {
    if (plus.dim() != 1) throw DimensionError("SignSlope family needs scalar points");
    SlopeProblem pb{{}, {}, psi};
    for (std::size_t i = 0; i < plus.size(); ++i) {
        if (plus.weight(i) == 0.0) continue;
        pb.w.push_back(plus.weight(i));
        pb.z.push_back(plus.point(i)[0]);
    }
    for (std::size_t i = 0; i < minus.size(); ++i) {
        if (minus.weight(i) == 0.0) continue;
        pb.w.push_back(minus.weight(i));
        pb.z.push_back(-minus.point(i)[0]);
    }

    const double g0 = pb.slope(0.0);
    if (g0 == 0.0) return finish(0.0, 0.0, SlopeDiscriminator{0.0}, SolverStatus::Converged, 0);
    const double dir = g0 > 0.0 ? 1.0 : -1.0;

    if (psi == 0.0) {
        bool separable = true;
        double saturated = 0.0;
        for (std::size_t i = 0; i < pb.z.size(); ++i) {
            if (dir * pb.z[i] < 0.0) separable = false;
            if (dir * pb.z[i] > 0.0) saturated += pb.w[i];
        }
        if (separable) {
            // g increases without bound in u toward sum_{dir z > 0} w log 2;
            // keep a finite slope that is within round-off of the supremum.
            const double sup = saturated * std::numbers::ln2;
            double u = 1.0;
            int it = 0;
            while (sup - pb.value(dir * u) > 1e-13 * std::max(sup, 1.0) && it < 2000) {
                u *= 2.0;
                ++it;
            }
            return finish(sup, u, SlopeDiscriminator{dir * u}, SolverStatus::Saturated, it);
        }
    }

    double lo = 0.0;
    double hi = 1.0;
    int it = 0;
    while (pb.slope(dir * hi) * dir > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++it > 2000) throw NumericError("SignSlope oracle: failed to bracket the optimum");
    }
    double u = 0.5 * (lo + hi);
    for (int k = 0; k < 400; ++k, ++it) {
        u = 0.5 * (lo + hi);
        const double g = pb.slope(dir * u) * dir;
        if (std::abs(g) < options.slope_gradient_tolerance) break;
        if (g > 0.0)
            lo = u;
        else
            hi = u;
        if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
    }
    return finish(pb.value(dir * u), u, SlopeDiscriminator{dir * u}, SolverStatus::Converged, it);
}

DDResult dd_linear_ball(const WeightedSample& plus, const WeightedSample& minus, double psi,
                        const DDOptions& options) {
    const auto n_plus = static_cast<Eigen::Index>(plus.size());
    const auto n_minus = static_cast<Eigen::Index>(minus.size());
    DenseMatrix x(n_plus + n_minus, static_cast<Eigen::Index>(plus.dim()));
    x.topRows(n_plus) = plus.points();
    x.bottomRows(n_minus) = minus.points();
    std::vector<double> labels(static_cast<std::size_t>(n_plus + n_minus), 1.0);
    std::fill(labels.begin() + n_plus, labels.end(), -1.0);
    std::vector<double> w(plus.weights().begin(), plus.weights().end());
    w.insert(w.end(), minus.weights().begin(), minus.weights().end());

    LogisticOptions lopts = options.logistic;
    if (options.warm_start && options.warm_start->coef.size() == x.cols()) {
        DenseVector start(x.cols() + 1);
        start[0] = options.warm_start->intercept;
        start.tail(x.cols()) = options.warm_start->coef;
        lopts.warm_start = start;
    }
    const LogisticFit fit = fit_weighted_logistic(x, labels, w, psi, lopts);
    double squared = fit.objective;
    if (fit.status == SolverStatus::Saturated)
        squared = (plus.total_weight() + minus.total_weight()) * std::numbers::ln2;
    return finish(squared, fit.coef.norm(), AffineDiscriminator{fit.intercept, fit.coef},
                  fit.status, fit.iterations);
}

}  // namespace

const char* class_name(const FunctionClass& cls) {
    switch (cls.index()) {
        case 0: return "signslope";
        case 1: return "linear";
        case 2: return "kernel";
        default: return "neural";
    }
}

double DDResult::score(std::span<const double> x) const {
    if (const auto* s = std::get_if<SlopeDiscriminator>(&discriminator)) {
        if (x.size() != 1) throw DimensionError("slope discriminator takes scalar points");
        return s->slope * x[0];
    }
    if (const auto* a = std::get_if<AffineDiscriminator>(&discriminator)) {
        if (static_cast<Eigen::Index>(x.size()) != a->coef.size())
            throw DimensionError("affine discriminator dimension mismatch");
        double z = a->intercept;
        for (std::size_t j = 0; j < x.size(); ++j) z += a->coef[static_cast<Eigen::Index>(j)] * x[j];
        return z;
    }
    return forward(std::get<NeuralDiscriminator>(discriminator).net, x);
}

double ipm(const FunctionClass& cls, const WeightedSample& plus, const WeightedSample& minus) {
    require_same_dim(plus, minus);
    if (std::holds_alternative<SignSlope>(cls)) {
        if (plus.dim() != 1) throw DimensionError("SignSlope family needs scalar points");
        return std::abs(signed_moment(plus, minus)[0]);
    }
    if (std::holds_alternative<LinearBall>(cls)) {
        if (!equal_totals(plus, minus)) return kInf;
        return signed_moment(plus, minus).norm();
    }
    if (const auto* k = std::get_if<KernelSpec>(&cls)) return mmd(*k, plus, minus);
    throw PreconditionError("IPM has no closed form for neural discriminator classes");
}

DDResult dd(const FunctionClass& cls, const WeightedSample& plus, const WeightedSample& minus,
            double psi, const DDOptions& options) {
    require_same_dim(plus, minus);
    if (!(psi >= 0.0) || !std::isfinite(psi))
        throw PreconditionError("dd: psi must be finite and nonnegative");
    if (std::holds_alternative<SignSlope>(cls)) return dd_sign_slope(plus, minus, psi, options);
    if (std::holds_alternative<LinearBall>(cls)) return dd_linear_ball(plus, minus, psi, options);
    if (const auto* nc = std::get_if<NeuralClass>(&cls))
        return detail::dd_neural(*nc, plus, minus, psi);
    throw PreconditionError("dd: no discriminative-distance oracle for kernel classes");
}

double discriminator_bound(const FunctionClass& cls, const WeightedSample& plus,
                           const WeightedSample& minus) {
    require_same_dim(plus, minus);
    double m = 0.0;
    auto visit = [&](const WeightedSample& s) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto p = s.point(i);
            double norm2 = 0.0;
            for (double v : p) norm2 += v * v;
            m = std::max(m, std::sqrt(norm2));
        }
    };
    if (std::holds_alternative<SignSlope>(cls)) {
        if (plus.dim() != 1) throw DimensionError("SignSlope family needs scalar points");
    } else if (std::holds_alternative<LinearBall>(cls)) {
        // The intercept cancels on equal-total samples, leaving |b'x| <= |x|.
        if (!equal_totals(plus, minus))
            throw PreconditionError("LinearBall bound needs samples with equal total weight");
    } else {
        throw PreconditionError("bound_check supports SignSlope and LinearBall only");
    }
    visit(plus);
    visit(minus);
    return m;
}

BoundReport bound_check(const FunctionClass& cls, const WeightedSample& plus,
                        const WeightedSample& minus, double psi, double tolerance) {
    if (!(psi > 0.0)) throw PreconditionError("bound_check needs psi > 0");
    BoundReport r;
    r.m_bound = discriminator_bound(cls, plus, minus);
    r.total_weight = plus.total_weight() + minus.total_weight();
    r.ipm = ipm(cls, plus, minus);
    r.dd = dd(cls, plus, minus, psi).value;
    r.lower = 2.0 * std::sqrt(2.0 * psi) * r.dd;
    r.upper = std::max(2.0 * r.m_bound * std::sqrt(r.total_weight), 4.0 * std::sqrt(psi)) * r.dd;
    if (r.lower > r.ipm + tolerance)
        throw BoundViolation("lower bound 2 sqrt(2 psi) DD exceeds the IPM", r);
    if (r.ipm > r.upper + tolerance) throw BoundViolation("IPM exceeds the upper bound", r);
    return r;
}

}  // namespace deepmatch
