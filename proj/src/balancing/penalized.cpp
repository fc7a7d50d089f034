#include "deepmatch/balancing/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "deepmatch/balancing/objective.hpp"
#include "deepmatch/distances/losses.hpp"
#include "deepmatch/error.hpp"

namespace deepmatch {

namespace {

struct Eval {
    double value = INFINITY;
    std::vector<double> grad;
    std::optional<AffineDiscriminator> disc;
};

// Works on u = W / n1.
Eval evaluate(const WeightedSample& plus, const DenseMatrix& xc, std::span<const double> u,
              double psi, double lambda, double phi, const DDOptions& options) {
    double total = 0.0;
    for (double v : u) total += v;
    if (!(total > 0.0)) return {};
    const WeightedSample minus(std::vector<double>(u.begin(), u.end()), xc);
    const DDResult r = dd(LinearBall{}, plus, minus, psi, options);
    if (r.status != SolverStatus::Converged) throw NumericError("penalized_weights: oracle did not converge");
    Eval e;
    e.value = r.squared_value;
    e.grad.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        e.value += lambda * u[i] * u[i] + phi * u[i];
        e.grad[i] = link_loss(-r.score(minus.point(i))) + 2.0 * lambda * u[i] + phi;
    }
    e.disc = std::get<AffineDiscriminator>(r.discriminator);
    return e;
}

}  // namespace

PenalizedResult penalized_weights(const Dataset& data, double psi, double lambda, double phi,
                                  int max_iterations, double tolerance) {
    if (!(psi > 0.0)) throw PreconditionError("penalized_weights needs psi > 0");
    if (!(lambda >= 0.0) || !std::isfinite(phi)) throw PreconditionError("lambda must be >= 0 and phi finite");
    if (lambda == 0.0 && phi < 0.0) throw PreconditionError("negative phi needs lambda > 0");
    const WeightedSample plus = treated_sample(data);
    const DenseMatrix xc = data.arm_points(false);
    const std::size_t n0 = data.n_control();
    std::vector<double> u(n0, 1.0 / static_cast<double>(n0));
    DDOptions options;
    Eval cur = evaluate(plus, xc, u, psi, lambda, phi, options);
    double step = 1.0;
    PenalizedResult out;
    int it = 0;
    for (; it < max_iterations; ++it) {
        options.warm_start = cur.disc;
        bool accepted = false;
        double moved = 0.0;
        for (int k = 0; k < 60; ++k) {
            std::vector<double> trial(n0);
            double dec = 0.0;
            moved = 0.0;
            for (std::size_t i = 0; i < n0; ++i) {
                trial[i] = std::max(0.0, u[i] - step * cur.grad[i]);
                dec += cur.grad[i] * (trial[i] - u[i]);
                moved = std::max(moved, std::abs(trial[i] - u[i]));
            }
            if (moved < tolerance) break;
            Eval next = evaluate(plus, xc, trial, psi, lambda, phi, options);
            if (next.value <= cur.value + 1e-4 * dec) {
                u = std::move(trial);
                cur = std::move(next);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.converged = moved < tolerance;
            break;
        }
        step *= 2.0;
    }
    const double n1 = static_cast<double>(data.n_treated());
    out.weights.resize(n0);
    for (std::size_t i = 0; i < n0; ++i) {
        out.weights[i] = n1 * u[i];
        out.weight_sum += out.weights[i];
    }
    out.objective = cur.value;
    out.iterations = it;
    return out;
}

}  // namespace deepmatch
