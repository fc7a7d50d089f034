#include <algorithm>
#include <cmath>
#include <limits>

#include "deepmatch/distances/distance.hpp"
#include "deepmatch/distances/losses.hpp"

namespace deepmatch {
namespace {

constexpr std::size_t kMaxDualPoints = 12;
constexpr double kInterior = 1e-300;

struct DualProblem {
    std::vector<double> w;
    DenseMatrix v;           // row i: s_i w_i x_i
    DenseVector a;           // constraint normal s_i w_i (LinearBall only)
    bool constrained = false;
    double psi = 1.0;

    std::size_t n() const { return w.size(); }

    double value(const DenseVector& p) const {
        double f = 0.0;
        for (std::size_t i = 0; i < n(); ++i)
            f += w[i] * binary_entropy_gap(p[static_cast<Eigen::Index>(i)]);
        const DenseVector m = v.transpose() * p;
        return f + m.squaredNorm() / (2.0 * psi);
    }
};

bool interior(const DenseVector& p) {
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (!(p[i] > kInterior && p[i] < 1.0 - 1e-16)) return false;
    return true;
}

// Feasible-start damped Newton on the (optionally equality-constrained)
// strictly convex objective. Returns the reduced gradient norm at exit.
double newton(const DualProblem& pb, DenseVector& p, const DualOptions& options) {
    const auto n = static_cast<Eigen::Index>(pb.n());
    const Eigen::Index k = pb.constrained ? 1 : 0;
    double fval = pb.value(p);
    double gnorm = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.max_iterations; ++it) {
        const DenseVector m = pb.v.transpose() * p;
        DenseVector g = pb.v * m / pb.psi;
        DenseMatrix h = pb.v * pb.v.transpose() / pb.psi;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double wi = pb.w[static_cast<std::size_t>(i)];
            g[i] += wi * binary_entropy_gap_slope(p[i]);
            h(i, i) += wi / (p[i] * (1.0 - p[i]));
        }
        DenseVector reduced = g;
        if (pb.constrained) reduced -= pb.a * (pb.a.dot(g) / pb.a.squaredNorm());
        gnorm = reduced.norm();
        if (gnorm < options.gradient_tolerance) break;

        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
        kkt.topLeftCorner(n, n) = h;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        rhs.head(n) = -g;
        if (pb.constrained) {
            kkt.block(0, n, n, 1) = pb.a;
            kkt.block(n, 0, 1, n) = pb.a.transpose();
        }
        const DenseVector step = kkt.fullPivLu().solve(rhs).head(n);
        if (!step.allFinite()) throw NumericError("dd_dual: singular Newton system");

        double alpha = 1.0;
        bool moved = false;
        for (int half = 0; half < 80; ++half, alpha *= 0.5) {
            const DenseVector trial = p + alpha * step;
            if (!interior(trial)) continue;
            const double ft = pb.value(trial);
            if (ft <= fval + 1e-4 * alpha * g.dot(step)) {
                p = trial;
                fval = ft;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return gnorm;
}

}  // namespace

DualResult dd_dual(const FunctionClass& cls, const WeightedSample& plus,
                   const WeightedSample& minus, double psi, const DualOptions& options) {
    if (!(psi > 0.0) || !std::isfinite(psi)) throw PreconditionError("dd_dual needs psi > 0");
    if (plus.dim() != minus.dim()) throw DimensionError("dd_dual: sample dimensions differ");
    const std::size_t n = plus.size() + minus.size();
    if (n > kMaxDualPoints) throw PreconditionError("dd_dual is limited to 12 points");

    DualProblem pb;
    pb.psi = psi;
    if (std::holds_alternative<SignSlope>(cls)) {
        if (plus.dim() != 1) throw DimensionError("SignSlope family needs scalar points");
    } else if (std::holds_alternative<LinearBall>(cls)) {
        const double tp = plus.total_weight();
        const double tm = minus.total_weight();
        if (std::abs(tp - tm) > 1e-9 * std::max(tp, tm))
            throw PreconditionError("dd_dual: LinearBall needs equal total weights");
        pb.constrained = true;
    } else {
        throw PreconditionError("dd_dual supports SignSlope and LinearBall only");
    }

    pb.v.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(plus.dim()));
    pb.a.resize(static_cast<Eigen::Index>(n));
    std::size_t r = 0;
    auto add = [&](const WeightedSample& s, double sign) {
        for (std::size_t i = 0; i < s.size(); ++i, ++r) {
            const auto row = static_cast<Eigen::Index>(r);
            pb.w.push_back(s.weight(i));
            pb.a[row] = sign * s.weight(i);
            for (std::size_t j = 0; j < s.dim(); ++j)
                pb.v(row, static_cast<Eigen::Index>(j)) = sign * s.weight(i) * s.point(i)[j];
        }
    };
    add(plus, 1.0);
    add(minus, -1.0);

    RngStream rng(options.seed, 0);
    double best = std::numeric_limits<double>::infinity();
    double worst = -best;
    DenseVector best_p;
    for (int run = 0; run < std::max(options.restarts, 1); ++run) {
        DenseVector delta(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < delta.size(); ++i)
            delta[i] = run == 0 ? 0.0 : rng.uniform(-0.45, 0.45);
        if (pb.constrained) delta -= pb.a * (pb.a.dot(delta) / pb.a.squaredNorm());
        const double peak = delta.cwiseAbs().maxCoeff();
        if (peak > 0.45) delta *= 0.45 / peak;
        DenseVector p = DenseVector::Constant(static_cast<Eigen::Index>(n), 0.5) + delta;
        newton(pb, p, options);
        const double f = pb.value(p);
        if (f < best) {
            best = f;
            best_p = p;
        }
        worst = std::max(worst, f);
    }

    DualResult out;
    out.value = best;
    out.restart_spread = worst - best;
    for (std::size_t i = 0; i < plus.size(); ++i)
        out.p_plus.push_back(best_p[static_cast<Eigen::Index>(i)]);
    for (std::size_t i = 0; i < minus.size(); ++i)
        out.p_minus.push_back(best_p[static_cast<Eigen::Index>(plus.size() + i)]);
    return out;
}

}  // namespace deepmatch
