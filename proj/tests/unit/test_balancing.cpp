#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "deepmatch/balancing/deepmatch.hpp"
#include "deepmatch/balancing/frank_wolfe.hpp"
#include "deepmatch/balancing/game.hpp"
#include "deepmatch/balancing/objective.hpp"
#include "deepmatch/balancing/penalized.hpp"
#include "deepmatch/distances/losses.hpp"
#include "deepmatch/error.hpp"
#include "deepmatch/numerics/gradcheck.hpp"
#include "doctest.h"

using namespace deepmatch;

namespace {

Dataset synth_data(RngStream& rng, std::size_t n1, std::size_t n0, std::size_t d, double shift) {
    DenseMatrix x(static_cast<Eigen::Index>(n1 + n0), static_cast<Eigen::Index>(d));
    std::vector<int> t(n1 + n0, 0);
    for (std::size_t i = 0; i < n1 + n0; ++i) {
        if (i < n1) t[i] = 1;
        for (std::size_t j = 0; j < d; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rng.uniform(-1, 1) + (i < n1 ? shift : 0.0);
    }
    return Dataset(std::move(x), std::move(t));
}

// Minimum of the unit-sum objective over a 0.01-spaced grid on the 3-simplex.
double grid_minimum(const Dataset& d, const FunctionClass& cls, double psi, double lambda) {
    double best = INFINITY;
    for (int a = 0; a <= 100; ++a)
        for (int b = 0; a + b <= 100; ++b) {
            const std::vector<double> u{a / 100.0, b / 100.0, (100 - a - b) / 100.0};
            best = std::min(best, objective_unit_sum(u, d, cls, psi, lambda));
        }
    return best;
}

}  // namespace

TEST_CASE("game unit terms by hand") {
    const GameParams zero{0.0, 0.0, 0.0, 10};
    CHECK(unit_term(true, 0.0, 0.0, zero).value == doctest::Approx(0.0));
    CHECK(unit_term(false, 0.0, 0.0, zero).value == doctest::Approx(0.0));
    const GameParams p{0.0, 1.0, 0.2, 10};
    const double e05 = std::exp(0.5);
    const double l = std::log(1.0 / (1.0 + std::exp(1.0))) + std::log(2.0);  // l(-1)
    CHECK(unit_term(false, 1.0, 0.5, p).value ==
          doctest::Approx(e05 * l / 10 + std::exp(1.0) / 100 + 0.2 * e05 / 10).epsilon(1e-14));
    // Beyond the clamp the weight is frozen.
    CHECK(unit_term(false, 1.0, 40.0, p).d_g == 0.0);
}

TEST_CASE("game and second-stage gradients match central differences") {
    RngStream rng(3, 0);
    int passed = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t d = 1 + rep % 3;
        const Dataset data = synth_data(rng, 3 + rep % 4, 4 + rep % 3, d, 0.3);
        Network f(Architecture::mlp(d, {3, 2}, Activation::Identity));
        Network g(Architecture::mlp(d, {2}, Activation::Identity));
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
        const auto rf = finite_difference_check(lf, f.params(), gf);
        const auto rg = finite_difference_check(lg, g.params(), gg);

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
        const auto r2 = finite_difference_check(l2, f.params(), g2);
        INFO("rep " << rep << " f " << rf.max_rel_error << " g " << rg.max_rel_error << " s2 " << r2.max_rel_error);
        CHECK(rf.max_rel_error < 1e-5);
        CHECK(rg.max_rel_error < 1e-5);
        CHECK(r2.max_rel_error < 1e-5);
        passed += rf.passed && rg.passed && r2.passed;
    }
    CHECK(passed == 50);
}

TEST_CASE("game_terms agrees with the batch form on one unit") {
    RngStream rng(4, 0);
    const Dataset data = synth_data(rng, 3, 3, 2, 0.0);
    Network f(Architecture::mlp(2, {3}, Activation::Identity));
    Network g(Architecture::mlp(2, {3}, Activation::Identity));
    f.initialize(rng);
    g.initialize(rng);
    const GameParams p{0.0, 0.5, 0.3, 3};
    for (std::size_t i = 0; i < data.size(); ++i) {
        const GameTerms t = game_terms(f, g, data, i, p);
        GameWorkspace ws;
        std::vector<double> gf(f.num_params()), gg(g.num_params());
        const std::vector<std::size_t> one{i};
        CHECK(game_batch(f, g, data, one, p, gf, gg, ws) == doctest::Approx(t.value));
        for (std::size_t k = 0; k < gf.size(); ++k) CHECK(gf[k] == doctest::Approx(t.grad_f[k]));
        for (std::size_t k = 0; k < gg.size(); ++k) CHECK(gg[k] == doctest::Approx(t.grad_g[k]));
    }
}

TEST_CASE("batch partition sizes differ by at most one") {
    const auto b = batch_bounds(1000, 100);
    CHECK(b.size() == 11);
    const auto c = batch_bounds(250, 100);
    REQUIRE(c.size() == 4);
    CHECK(c[1] - c[0] == 84);
    CHECK(c[3] - c[2] == 83);
    CHECK(c.back() == 250);
}

TEST_CASE("conditional gradient basics") {
    RngStream rng(5, 0);
    const Dataset d = synth_data(rng, 4, 5, 2, 0.5);
    const BalanceWeights w0 = fw_balance(d, LinearBall{}, 1.0, 1.0, 0);
    for (double v : w0.control()) CHECK(v == doctest::Approx(4.0 / 5.0));

    DenseMatrix x(2, 1);
    x << 0.3, -0.2;
    const Dataset two(x, {1, 0});
    const BalanceWeights w = fw_balance(two, LinearBall{}, 1.0, 0.0, 10);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(fw_balance(d, KernelSpec{}, 1.0, 1.0, 3), PreconditionError);
}

TEST_CASE("conditional gradient reaches the simplex-grid minimum") {
    RngStream rng(6, 0);
    for (int rep = 0; rep < 4; ++rep) {
        const Dataset d = synth_data(rng, 4, 3, 2, 0.4);
        FwTrace trace;
        const BalanceWeights w = fw_balance(d, LinearBall{}, 1.0, 1.0, 2000, &trace);
        const double obj = objective_eval(w, d, LinearBall{}, 1.0, 1.0);
        CHECK(obj <= grid_minimum(d, LinearBall{}, 1.0, 1.0) + 1e-3);
        CHECK(w.sum() == doctest::Approx(4.0).epsilon(1e-12));
    }
}

TEST_CASE("matchable arms converge to uniform weights") {
    RngStream rng(7, 0);
    DenseMatrix x(8, 2);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) x(i, j) = x(i + 4, j) = rng.uniform(-1, 1);
    const Dataset d(x, {1, 1, 1, 1, 0, 0, 0, 0});
    const BalanceWeights w = fw_balance(d, LinearBall{}, 1.0, 1.0, 500);
    const double obj = objective_eval(w, d, LinearBall{}, 1.0, 1.0);
    CHECK(obj <= 1.0 / 4.0 + 1e-3);  // lambda * sum u^2 at uniform u = 1/4
    CHECK(objective_eval(BalanceWeights::uniform(d), d, LinearBall{}, 1.0, 1.0) ==
          doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("objective is convex along random chords") {
    RngStream rng(8, 0);
    int violations = 0;
    for (int rep = 0; rep < 60; ++rep) {
        const Dataset d = synth_data(rng, 3 + rep % 3, 4, 2, 0.3);
        auto draw = [&] {
            std::vector<double> u(d.n_control());
            double s = 0;
            for (double& v : u) s += (v = rng.uniform(0.0, 1.0));
            for (double& v : u) v /= s;
            return u;
        };
        const auto a = draw(), b = draw();
        std::vector<double> m(a.size());
        for (std::size_t k = 0; k < m.size(); ++k) m[k] = 0.5 * (a[k] + b[k]);
        const double psi = rep % 2 ? 0.5 : 2.0;
        const double fa = objective_unit_sum(a, d, LinearBall{}, psi, 1.0);
        const double fb = objective_unit_sum(b, d, LinearBall{}, psi, 1.0);
        const double fm = objective_unit_sum(m, d, LinearBall{}, psi, 1.0);
        violations += fm > 0.5 * (fa + fb) + 1e-8;
    }
    CHECK(violations == 0);
}

TEST_CASE("fw trace matches the objective at the iterate") {
    RngStream rng(9, 0);
    const Dataset d = synth_data(rng, 5, 6, 2, 0.3);
    FwTrace trace;
    fw_balance(d, LinearBall{}, 0.5, 1.0, 1, &trace);
    REQUIRE(trace.objective.size() == 1);
    CHECK(trace.objective[0] ==
          doctest::Approx(objective_eval(BalanceWeights::uniform(d), d, LinearBall{}, 1.0, 0.5)).epsilon(1e-9));
}

TEST_CASE("deepmatch output invariants and constant covariates") {
    RngStream rng(10, 0);
    const Dataset d = synth_data(rng, 30, 50, 2, 0.5);
    GameConfig c;
    c.discriminator = default_net(2);
    c.weight_net = default_net(2);
    c.lambda = 1.0;
    c.runs = 2;
    c.batch_size = 20;
    c.epochs_stage1 = 3;
    c.epochs_stage2 = 2;
    c.learning_rate = 1e-2;
    c.phi_grid = std::vector<double>{0.1, 1.0};
    auto [w, trace] = deepmatch_balance(d, c);
    CHECK(w.sum() == doctest::Approx(30.0).epsilon(1e-12));
    for (double v : w.control()) CHECK(v >= 0.0);
    CHECK(trace.runs.size() == 4);
    for (const auto& r : trace.runs) {
        CHECK(r.epoch_objective.size() == 3);
        CHECK(trace.selected_v <= r.v);
    }
    CHECK(w.provenance().algorithm == "deepmatch");

    const auto full = w.full(d);
    for (std::size_t i : d.treated_indices()) CHECK(full[i] == 1.0);

    const Dataset flat(DenseMatrix::Constant(80, 2, 0.3), std::vector<int>(d.treatments().begin(), d.treatments().end()));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        c.seed = seed;
        auto [wf, tf] = deepmatch_balance(flat, c);
        for (double v : wf.control()) CHECK(v == doctest::Approx(30.0 / 50.0).epsilon(0.1));
    }
}

TEST_CASE("deepmatch is reproducible across thread counts") {
    RngStream rng(11, 0);
    const Dataset d = synth_data(rng, 20, 30, 2, 0.5);
    GameConfig c;
    c.discriminator = default_net(2);
    c.weight_net = default_net(2);
    c.runs = 2;
    c.batch_size = 10;
    c.epochs_stage1 = 2;
    c.epochs_stage2 = 1;
    c.learning_rate = 1e-2;
    c.phi_grid = std::vector<double>{0.01, 0.1, 1.0};
    auto [a, ta] = deepmatch_balance(d, c);
    c.threads = 3;
    auto [b, tb] = deepmatch_balance(d, c);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
    CHECK(ta.selected == tb.selected);
}

TEST_CASE("phi range brackets the weight-sum band") {
    RngStream rng(12, 0);
    const Dataset d = synth_data(rng, 40, 60, 2, 0.5);
    GameConfig c;
    c.discriminator = default_net(2);
    c.weight_net = default_net(2);
    c.batch_size = 20;
    c.learning_rate = 5e-2;
    c.probe_epochs = 5;
    c.grid_size = 7;
    const PhiRange r = phi_range(d, c);
    CHECK(r.grid.size() == 7);
    CHECK(r.grid.front() == doctest::Approx(r.low));
    CHECK(r.grid.back() == doctest::Approx(r.high));
    CHECK(r.low < r.high);
    for (std::size_t k = 1; k < r.grid.size(); ++k)
        CHECK(std::log(r.grid[k]) - std::log(r.grid[k - 1]) ==
              doctest::Approx((std::log(r.high) - std::log(r.low)) / 6.0));
    if (!r.fallback) {
        CHECK(r.decreasing);
        c.grid_size = 1;
        // Probe sums at the endpoints respect the band.
        double s_low = 0, s_high = 0;
        for (auto [phi, s] : r.probes) {
            if (phi == r.low) s_low = s;
            if (phi == r.high) s_high = s;
        }
        if (s_low > 0) CHECK(s_low >= c.eta * 40.0);
        if (s_high > 0) CHECK(s_high <= 40.0 / c.eta);
    }
}

namespace {

// Euclidean projection onto the unit simplex (sort and threshold).
std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> s = v;
    std::sort(s.begin(), s.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        cum += s[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (s[k] - t > 0.0) theta = t;
    }
    for (double& x : v) x = std::max(0.0, x - theta);
    return v;
}

// Projected gradient with backtracking on the unit-sum objective, affine class.
double simplex_minimum(const Dataset& d, double psi, double lambda) {
    const WeightedSample plus = treated_sample(d);
    const DenseMatrix xc = d.arm_points(false);
    const std::size_t n0 = d.n_control();
    std::vector<double> u(n0, 1.0 / static_cast<double>(n0));
    auto eval = [&](const std::vector<double>& w, std::vector<double>* grad) {
        const WeightedSample minus(w, xc);
        const DDResult r = dd(LinearBall{}, plus, minus, psi);
        double v = r.squared_value;
        if (grad) grad->resize(n0);
        for (std::size_t i = 0; i < n0; ++i) {
            v += lambda * w[i] * w[i];
            if (grad) (*grad)[i] = link_loss(-r.score(minus.point(i))) + 2.0 * lambda * w[i];
        }
        return v;
    };
    std::vector<double> g;
    double cur = eval(u, &g), step = 1.0;
    for (int it = 0; it < 3000; ++it) {
        bool moved = false;
        for (int k = 0; k < 50; ++k) {
            std::vector<double> trial(n0);
            for (std::size_t i = 0; i < n0; ++i) trial[i] = u[i] - step * g[i];
            trial = project_simplex(trial);
            double dec = 0.0, shift = 0.0;
            for (std::size_t i = 0; i < n0; ++i) {
                dec += g[i] * (trial[i] - u[i]);
                shift = std::max(shift, std::abs(trial[i] - u[i]));
            }
            if (shift < 1e-12) break;
            const double v = eval(trial, nullptr);
            if (v <= cur + 1e-4 * dec) {
                u = trial;
                cur = eval(u, &g);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        step *= 2.0;
    }
    return cur;
}

}  // namespace

TEST_CASE("penalized weight sum is nonincreasing in phi") {
    RngStream rng(61, 0);
    const Dataset d = synth_data(rng, 6, 8, 2, 0.5);
    double prev = INFINITY;
    for (double phi : {-0.4, -0.2, 0.0, 0.05, 0.2, 0.8, 3.0}) {
        const PenalizedResult r = penalized_weights(d, 1.0, 1.0, phi);
        CHECK(r.converged);
        CHECK(r.weight_sum <= prev + 1e-6);
        prev = r.weight_sum;
        for (double w : r.weights) CHECK(w >= 0.0);
    }
    CHECK_THROWS_AS(penalized_weights(d, 0.0, 1.0, 0.1), PreconditionError);
    CHECK_THROWS_AS(penalized_weights(d, 1.0, 0.0, -0.1), PreconditionError);
}

TEST_CASE("best normalized phi-path weights reach the constrained minimum") {
    for (std::uint64_t inst = 0; inst < 3; ++inst) {
        RngStream rng(62, inst);
        const Dataset d = synth_data(rng, 6, 8, 2, 0.6);
        const double psi = 1.0, lambda = 1.0;
        const double direct = simplex_minimum(d, psi, lambda);
        double best = INFINITY;
        // Signed grid: with lambda > 0 the multiplier of the sum constraint
        // is negative on these instances.
        for (int k = 0; k <= 120; ++k) {
            const double phi = -0.6 + 2.6 * k / 120.0;
            const PenalizedResult r = penalized_weights(d, psi, lambda, phi);
            if (!(r.weight_sum > 0.0)) continue;
            const BalanceWeights w(r.weights, WeightConvention::Unnormalized, d.n_treated());
            best = std::min(best, objective_eval(w.to_treated_count(), d, LinearBall{}, psi, lambda));
        }
        INFO("instance " << inst << " direct " << direct << " best " << best);
        CHECK(best >= direct - 1e-6);
        CHECK(best - direct < 1e-3);
    }
}
