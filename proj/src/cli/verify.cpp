#include "deepmatch/cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "deepmatch/balancing/frank_wolfe.hpp"
#include "deepmatch/balancing/game.hpp"
#include "deepmatch/balancing/objective.hpp"
#include "deepmatch/balancing/penalized.hpp"
#include "deepmatch/distances/distance.hpp"
#include "deepmatch/numerics/gradcheck.hpp"

namespace deepmatch::cli {

namespace {

WeightedSample line_sample(std::vector<double> w, std::vector<double> x) {
    DenseMatrix m(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = x[i];
    return WeightedSample(std::move(w), std::move(m));
}

WeightedSample random_sample(RngStream& rng, std::size_t n, std::size_t d, double total) {
    std::vector<double> w(n);
    double s = 0.0;
    for (double& v : w) s += (v = rng.uniform(0.1, 1.0));
    for (double& v : w) v *= total / s;
    DenseMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-1.5, 1.5);
    return WeightedSample(std::move(w), std::move(x));
}

Dataset random_data(RngStream& rng, std::size_t n1, std::size_t n0, std::size_t d, double shift) {
    DenseMatrix x(static_cast<Eigen::Index>(n1 + n0), static_cast<Eigen::Index>(d));
    std::vector<int> t(n1 + n0, 0);
    for (std::size_t i = 0; i < n1 + n0; ++i) {
        t[i] = i < n1;
        for (std::size_t j = 0; j < d; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rng.uniform(-1.0, 1.0) + (i < n1 ? shift : 0.0);
    }
    return Dataset(std::move(x), std::move(t));
}

// Runs `body`, turning an exception into a failed suite.
template <class F>
SuiteResult guarded(const std::string& name, F&& body) {
    SuiteResult r;
    r.name = name;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.margin = -INFINITY;
        r.detail = std::string("exception: ") + e.what();
    }
    return r;
}

void note(SuiteResult& r, double slack) {
    r.margin = r.checks == 0 ? slack : std::min(r.margin, slack);
    ++r.checks;
}

SuiteResult closed_forms() {
    return guarded("closed_forms", [](SuiteResult& r) {
        const double ln2 = std::numbers::ln2;
        const auto s1 = line_sample({1.0}, {1.0});
        const auto s2 = line_sample({1.0}, {-1.0});
        const auto s3 = line_sample({0.5, 0.5}, {1.0, -1.0});
        note(r, 1e-6 - std::abs(dd(SignSlope{}, s1, s2, 0.0).value - std::sqrt(2.0 * ln2)));
        note(r, 1e-6 - std::abs(dd(SignSlope{}, s1, s3, 0.0).value - std::sqrt(std::log(27.0 / 16.0) / 2.0)));
        for (double delta : {1e-3, 1e-2, 0.1, 1.0}) {
            const auto p = line_sample({1.0}, {delta / 2});
            const auto m = line_sample({1.0}, {-delta / 2});
            note(r, 1e-6 - std::abs(ipm(SignSlope{}, p, m) - delta));
            note(r, 1e-6 - std::abs(dd(SignSlope{}, p, m, 0.0).value - std::sqrt(2.0 * ln2)));
        }
        r.passed = r.margin >= 0.0;
    });
}

SuiteResult sandwich(RngStream rng) {
    return guarded("bound_sandwich", [&](SuiteResult& r) {
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t d = 1 + rep % 3;
            const double total = rng.uniform(0.2, 2.0);
            const auto p = random_sample(rng, 1 + rng.uniform_index(5), d, total);
            const auto m = random_sample(rng, 1 + rng.uniform_index(5), d, total);
            const double psi = std::array{0.1, 1.0, 10.0}[rep % 3];
            const FunctionClass cls = d == 1 && rep % 2 ? FunctionClass{SignSlope{}} : FunctionClass{LinearBall{}};
            const BoundReport b = bound_check(cls, p, m, psi, INFINITY);
            note(r, std::min(b.lower_slack(), b.upper_slack()) + 1e-6);
        }
        r.passed = r.margin >= 0.0;
    });
}

SuiteResult psi_limit(RngStream rng) {
    return guarded("psi_limit", [&](SuiteResult& r) {
        double worst_gap = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            const auto p = random_sample(rng, 3, 1, 1.0);
            const auto m = random_sample(rng, 3, 1, 1.0);
            const double big_m = discriminator_bound(SignSlope{}, p, m);
            const double wbar = p.total_weight() + m.total_weight();
            const double ip = ipm(SignSlope{}, p, m);
            double prev = 0.0;
            for (double mult : {1.0, 10.0, 100.0, 1e3, 1e4}) {
                const double psi = mult * wbar * big_m * big_m;
                const double scaled = 2.0 * std::sqrt(2.0 * psi) * dd(SignSlope{}, p, m, psi).value;
                note(r, scaled - prev + 1e-8);
                prev = scaled;
            }
            const double gap = (ip - prev) / ip;
            worst_gap = std::max(worst_gap, gap);
            note(r, 0.01 - gap);
        }
        std::ostringstream os;
        os << "worst relative gap at 1e4 " << worst_gap;
        r.detail = os.str();
        r.passed = r.margin >= 0.0;
    });
}

SuiteResult duality(RngStream rng) {
    return guarded("duality", [&](SuiteResult& r) {
        for (int rep = 0; rep < 20; ++rep) {
            const double psi = std::array{0.5, 1.0, 5.0}[rep % 3];
            const auto p = random_sample(rng, 3, 1, 1.0);
            const auto m = random_sample(rng, 3, 1, rep % 2 ? 1.0 : 0.6);
            note(r, 1e-4 - std::abs(dd_dual(SignSlope{}, p, m, psi).value -
                                    dd(SignSlope{}, p, m, psi).squared_value));
            const auto p2 = random_sample(rng, 3, 2, 1.0);
            const auto m2 = random_sample(rng, 3, 2, 1.0);
            note(r, 1e-4 - std::abs(dd_dual(LinearBall{}, p2, m2, psi).value -
                                    dd(LinearBall{}, p2, m2, psi).squared_value));
        }
        r.passed = r.margin >= 0.0;
    });
}

std::vector<double> random_simplex(RngStream& rng, std::size_t n) {
    std::vector<double> u(n);
    double s = 0.0;
    for (double& v : u) s += (v = -std::log(1.0 - rng.uniform()));
    for (double& v : u) v /= s;
    return u;
}

SuiteResult convexity(RngStream rng) {
    return guarded("convexity", [&](SuiteResult& r) {
        for (int rep = 0; rep < 50; ++rep) {
            const Dataset d = random_data(rng, 3 + rep % 3, 4 + rep % 4, 1 + rep % 2, 0.4);
            const double psi = rep % 2 ? 0.5 : 0.0, lambda = rep % 3 ? 1.0 : 0.0;
            const auto a = random_simplex(rng, d.n_control());
            const auto b = random_simplex(rng, d.n_control());
            std::vector<double> mid(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
            const double fa = objective_unit_sum(a, d, LinearBall{}, psi, lambda);
            const double fb = objective_unit_sum(b, d, LinearBall{}, psi, lambda);
            const double fm = objective_unit_sum(mid, d, LinearBall{}, psi, lambda);
            note(r, 0.5 * (fa + fb) - fm + 1e-8);
        }
        r.passed = r.margin >= 0.0;
    });
}

SuiteResult gradients(RngStream rng, bool corrupt) {
    return guarded("gradients", [&](SuiteResult& r) {
        for (int rep = 0; rep < 10; ++rep) {
            const std::size_t dim = 1 + rep % 3;
            const Dataset data = random_data(rng, 3 + rep % 4, 4 + rep % 3, dim, 0.3);
            Network f(Architecture::mlp(dim, {3, 2}, Activation::Identity));
            Network g(Architecture::mlp(dim, {2}, Activation::Identity));
            f.initialize(rng);
            g.initialize(rng);
            for (auto* net : {&f, &g})
                for (std::size_t l = 0; l < net->layers().size(); ++l)
                    for (double& b : net->bias(l)) b = rng.uniform(-0.3, 0.3);
            const GameParams p{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 1), data.n_treated()};
            std::vector<std::size_t> batch(data.size());
            std::iota(batch.begin(), batch.end(), std::size_t{0});
            GameWorkspace ws;
            std::vector<double> gf(f.num_params()), gg(g.num_params());
            game_batch(f, g, data, batch, p, gf, gg, ws);
            if (corrupt) {
                for (double& v : gf) v *= 1.001;
                gg[0] += 1e-3 * (1.0 + std::abs(gg[0]));
            }
            auto lf = [&](std::span<const double> th) {
                Network probe = f;
                std::copy(th.begin(), th.end(), probe.params().begin());
                GameWorkspace w2;
                return game_batch(probe, g, data, batch, p, {}, {}, w2);
            };
            auto lg = [&](std::span<const double> th) {
                Network probe = g;
                std::copy(th.begin(), th.end(), probe.params().begin());
                GameWorkspace w2;
                return game_batch(f, probe, data, batch, p, {}, {}, w2);
            };
            std::vector<double> full(data.size());
            for (double& w : full) w = rng.uniform(0.1, 2.0);
            ForwardCache cache;
            std::vector<double> g2(f.num_params());
            stage2_batch(f, data, full, batch, p.psi, data.n_treated(), g2, cache);
            auto l2 = [&](std::span<const double> th) {
                Network probe = f;
                std::copy(th.begin(), th.end(), probe.params().begin());
                ForwardCache c2;
                return stage2_batch(probe, data, full, batch, p.psi, data.n_treated(), {}, c2);
            };
            for (const auto& rep_fd : {finite_difference_check(lf, f.params(), gf),
                                       finite_difference_check(lg, g.params(), gg),
                                       finite_difference_check(l2, f.params(), g2)})
                note(r, 1e-5 - rep_fd.max_rel_error);
        }
        r.passed = r.margin >= 0.0;
        if (corrupt) r.detail = "analytic gradient deliberately perturbed";
    });
}

SuiteResult grid_optimality(RngStream rng) {
    return guarded("fw_grid_optimality", [&](SuiteResult& r) {
        for (int rep = 0; rep < 3; ++rep) {
            const Dataset d = random_data(rng, 3, 3, 1, 0.5);
            const double psi = 0.5, lambda = 0.5;
            double best = INFINITY;
            for (int a = 0; a <= 100; ++a)
                for (int b = 0; a + b <= 100; ++b) {
                    const std::vector<double> u{a / 100.0, b / 100.0, (100 - a - b) / 100.0};
                    best = std::min(best, objective_unit_sum(u, d, LinearBall{}, psi, lambda));
                }
            const BalanceWeights w = fw_balance(d, LinearBall{}, lambda, psi, 2000);
            note(r, 1e-3 - (objective_eval(w, d, LinearBall{}, psi, lambda) - best));
        }
        r.passed = r.margin >= 0.0;
    });
}

SuiteResult phi_path(RngStream rng) {
    return guarded("phi_path", [&](SuiteResult& r) {
        const Dataset d = random_data(rng, 5, 7, 2, 0.6);
        const double psi = 1.0, lambda = 1.0;
        const BalanceWeights direct = fw_balance(d, LinearBall{}, lambda, psi, 4000);
        const double target = objective_eval(direct, d, LinearBall{}, psi, lambda);
        double best = INFINITY;
        for (int k = 0; k <= 80; ++k) {
            const double phi = -0.6 + 2.6 * k / 80.0;
            const PenalizedResult pr = penalized_weights(d, psi, lambda, phi);
            if (!(pr.weight_sum > 0.0)) continue;
            const BalanceWeights w(pr.weights, WeightConvention::Unnormalized, d.n_treated());
            best = std::min(best, objective_eval(w.to_treated_count(), d, LinearBall{}, psi, lambda));
        }
        note(r, 1e-3 - std::abs(best - target));
        std::ostringstream os;
        os << "path " << best << " vs conditional gradient " << target;
        r.detail = os.str();
        r.passed = r.margin >= 0.0;
    });
}

}  // namespace

std::vector<SuiteResult> run_verify(const VerifyOptions& options) {
    const std::uint64_t s = options.seed;
    return {closed_forms(),
            sandwich(RngStream(s, 1)),
            psi_limit(RngStream(s, 2)),
            duality(RngStream(s, 3)),
            convexity(RngStream(s, 4)),
            gradients(RngStream(s, 5), options.corrupt_gradient),
            grid_optimality(RngStream(s, 6)),
            phi_path(RngStream(s, 7))};
}

}  // namespace deepmatch::cli
