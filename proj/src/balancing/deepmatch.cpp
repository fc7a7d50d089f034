#include "deepmatch/balancing/deepmatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <atomic>
#include <thread>

#include "deepmatch/balancing/game.hpp"
#include "deepmatch/error.hpp"
#include "deepmatch/numerics/adam.hpp"

namespace deepmatch {
namespace {

constexpr double kPhiBracketLow = 1e-6;
constexpr double kPhiBracketHigh = 1e6;
constexpr double kPhiExpandLimit = 1e12;
constexpr std::uint64_t kProbeStream = 1ull << 40;

class Fnv {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) h_ = (h_ ^ c[i]) * 1099511628211ull;
    }
    template <class T>
    void value(const T& v) {
        bytes(&v, sizeof v);
    }
    void arch(const Architecture& a) {
        value(a.in_channels);
        value(a.in_height);
        value(a.in_width);
        for (const LayerSpec& l : a.layers) {
            value(l.kind);
            value(l.width);
            value(l.kernel);
            value(l.activation);
        }
    }
    std::uint64_t get() const { return h_; }

private:
    std::uint64_t h_ = 1469598103934665603ull;
};

void check_identity_output(const Architecture& a, std::size_t dim, const char* what) {
    if (a.input_size() != dim)
        throw PreconditionError(std::string(what) + " input size does not match the covariates");
    if (a.layers.empty() || a.layers.back().activation != Activation::Identity)
        throw PreconditionError(std::string(what) + " needs an identity output unit");
}

struct Trainer {
    const Dataset& data;
    const GameConfig& cfg;
    RngStream rng;
    Network f;
    Network g;
    std::vector<std::size_t> order;
    GameWorkspace ws;

    Trainer(const Dataset& d, const GameConfig& c, std::uint64_t stream)
        : data(d), cfg(c), rng(c.seed, stream), f(c.discriminator), g(c.weight_net) {
        f.initialize(rng);
        g.initialize(rng);
        order.resize(d.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
    }

    // One stage-1 epoch of simultaneous updates.
    void stage1_epoch(const GameParams& p, AdamState& af, AdamState& ag) {
        std::vector<double> gf(f.num_params()), gg(g.num_params());
        rng.shuffle(std::span<std::size_t>(order));
        const auto bounds = batch_bounds(order.size(), cfg.batch_size);
        for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
            const std::span<const std::size_t> batch(order.data() + bounds[j],
                                                     bounds[j + 1] - bounds[j]);
            game_batch(f, g, data, batch, p, gf, gg, ws);
            // f ascends L: hand Adam the negated gradient.
            for (double& v : gf) v = -v;
            adam_step(f.params(), gf, af, cfg.learning_rate);
            adam_step(g.params(), gg, ag, cfg.learning_rate);
        }
    }

    double full_objective(const GameParams& p) {
        return game_batch(f, g, data, order, p, {}, {}, ws);
    }
};

double probe_sum(const Dataset& data, const GameConfig& cfg, double phi, int epochs) {
    Trainer t(data, cfg, kProbeStream);
    const GameParams p{cfg.psi, cfg.lambda, phi, data.n_treated()};
    AdamState af(t.f.num_params()), ag(t.g.num_params());
    for (int e = 0; e < epochs; ++e) t.stage1_epoch(p, af, ag);
    return raw_weight_sum(t.g, data);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> grid(n);
    if (n == 1) {
        grid[0] = std::sqrt(lo * hi);
        return grid;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t k = 0; k < n; ++k)
        grid[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
    return grid;
}

}  // namespace

Architecture default_net(std::size_t input_dim, std::size_t depth, std::size_t width) {
    return Architecture::mlp(input_dim, std::vector<std::size_t>(depth, width),
                             Activation::Identity);
}

void GameConfig::validate(std::size_t input_dim) const {
    if (!(psi >= 0.0) || !(lambda >= 0.0)) throw PreconditionError("psi and lambda must be >= 0");
    if (epochs_stage1 < 1 || epochs_stage2 < 1) throw PreconditionError("K1 and K2 must be >= 1");
    if (batch_size == 0) throw PreconditionError("batch size must be positive");
    if (runs < 1) throw PreconditionError("restart count must be >= 1");
    if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("eta must lie in (0,1)");
    if (grid_size < 1) throw PreconditionError("phi grid needs at least one value");
    if (!(learning_rate > 0.0)) throw PreconditionError("learning rate must be positive");
    if (phi_grid)
        for (double v : *phi_grid)
            if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("phi must be >= 0");
    check_identity_output(discriminator, input_dim, "discriminator");
    check_identity_output(weight_net, input_dim, "weight network");
}

std::uint64_t GameConfig::hash() const {
    Fnv h;
    h.value(psi);
    h.value(lambda);
    h.value(epochs_stage1);
    h.value(epochs_stage2);
    h.value(batch_size);
    h.value(runs);
    h.value(eta);
    h.value(grid_size);
    h.value(learning_rate);
    h.arch(discriminator);
    h.arch(weight_net);
    h.value(seed);
    h.value(probe_epochs);
    if (phi_grid)
        for (double v : *phi_grid) h.value(v);
    return h.get();
}

PhiRange phi_range(const Dataset& data, const GameConfig& config) {
    data.require_both_arms();
    config.validate(data.dim());
    const int epochs =
        config.probe_epochs > 0 ? config.probe_epochs : std::max(2, config.epochs_stage1 / 5);
    const double n1 = static_cast<double>(data.n_treated());
    PhiRange out;
    auto probe = [&](double phi) {
        const double s = probe_sum(data, config, phi, epochs);
        out.probes.emplace_back(phi, s);
        return s;
    };

    double lo = kPhiBracketLow, hi = kPhiBracketHigh;
    double s_lo = probe(lo), s_hi = probe(hi);
    out.decreasing = s_lo >= s_hi;
    const double big = n1 / config.eta, small = config.eta * n1;
    // Expand until both band edges lie inside [min sum, max sum].
    auto covered = [&] {
        const double top = std::max(s_lo, s_hi), bottom = std::min(s_lo, s_hi);
        return top >= big && bottom <= small;
    };
    while (!covered() && (lo > 1.0 / kPhiExpandLimit || hi < kPhiExpandLimit)) {
        lo = std::max(lo * 1e-3, 1.0 / kPhiExpandLimit);
        hi = std::min(hi * 1e3, kPhiExpandLimit);
        s_lo = probe(lo);
        s_hi = probe(hi);
        out.decreasing = s_lo >= s_hi;
    }

    if (!covered()) {
        out.fallback = true;
        out.low = kPhiBracketLow;
        out.high = kPhiBracketHigh;
    } else {
        // Bisection on log phi for the crossing of `level`.
        auto crossing = [&](double level) {
            double a = std::log(lo), b = std::log(hi);
            for (int it = 0; it < 20; ++it) {
                const double m = 0.5 * (a + b);
                const double s = probe(std::exp(m));
                const bool above = s >= level;
                if (above == out.decreasing)
                    a = m;
                else
                    b = m;
            }
            return out.decreasing ? std::exp(a) : std::exp(b);
        };
        // With a decreasing sum the crossing of n1/eta is the smaller phi.
        const double p_big = crossing(big), p_small = crossing(small);
        out.low = std::min(p_big, p_small);
        out.high = std::max(p_big, p_small);
        if (!(out.high > out.low)) out.high = out.low * (1.0 + 1e-9);
    }
    out.grid = log_grid(out.low, out.high, config.grid_size);
    return out;
}

GameRun deepmatch_run(const Dataset& data, const GameConfig& cfg, double phi, int run,
                      std::uint64_t stream, std::vector<double>& control_weights) {
    GameRun out;
    out.phi = phi;
    out.run = run;
    Trainer t(data, cfg, stream);
    const GameParams p{cfg.psi, cfg.lambda, phi, data.n_treated()};
    AdamState af(t.f.num_params()), ag(t.g.num_params());
    for (int e = 0; e < cfg.epochs_stage1; ++e) {
        t.stage1_epoch(p, af, ag);
        out.epoch_objective.push_back(t.full_objective(p));
        out.epoch_weight_sum.push_back(raw_weight_sum(t.g, data));
    }
    out.raw_weight_sum = out.epoch_weight_sum.back();

    control_weights = normalized_weights(t.g, data);
    std::vector<double> full(data.size(), 1.0);
    const auto ctrl = data.control_indices();
    for (std::size_t k = 0; k < ctrl.size(); ++k) full[ctrl[k]] = control_weights[k];

    AdamState a2(t.f.num_params());
    std::vector<double> gf(t.f.num_params());
    ForwardCache cache;
    for (int e = 0; e < cfg.epochs_stage2; ++e) {
        t.rng.shuffle(std::span<std::size_t>(t.order));
        const auto bounds = batch_bounds(t.order.size(), cfg.batch_size);
        for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
            const std::span<const std::size_t> batch(t.order.data() + bounds[j],
                                                     bounds[j + 1] - bounds[j]);
            stage2_batch(t.f, data, full, batch, cfg.psi, data.n_treated(), gf, cache);
            for (double& v : gf) v = -v;
            adam_step(t.f.params(), gf, a2, cfg.learning_rate);
        }
    }
    out.v = selection_score(t.f, data, full, cfg.psi, cfg.lambda);
    if (!std::isfinite(out.v)) {
        out.failure = "non-finite selection score";
        out.v = std::numeric_limits<double>::infinity();
    }
    return out;
}

std::pair<BalanceWeights, GameTrace> deepmatch_balance(const Dataset& data, const GameConfig& config) {
    data.require_both_arms();
    config.validate(data.dim());
    if (config.batch_size > data.size()) throw PreconditionError("batch size exceeds n");

    GameTrace trace;
    std::vector<double> grid;
    if (config.phi_grid) {
        grid = *config.phi_grid;
    } else {
        trace.range = phi_range(data, config);
        grid = trace.range->grid;
    }
    if (grid.empty()) throw PreconditionError("empty phi grid");

    const std::size_t cells = grid.size() * static_cast<std::size_t>(config.runs);
    trace.runs.resize(cells);
    std::vector<std::vector<double>> weights(cells);
    auto work = [&](std::size_t c) {
        const std::size_t gi = c / static_cast<std::size_t>(config.runs);
        const int run = static_cast<int>(c % static_cast<std::size_t>(config.runs));
        try {
            trace.runs[c] = deepmatch_run(data, config, grid[gi], run, c, weights[c]);
        } catch (const NumericError& e) {
            trace.runs[c].phi = grid[gi];
            trace.runs[c].run = run;
            trace.runs[c].v = std::numeric_limits<double>::infinity();
            trace.runs[c].failure = e.what();
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, cells));
    if (threads == 1) {
        for (std::size_t c = 0; c < cells; ++c) work(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < cells; c = next++) work(c);
            });
        for (auto& th : pool) th.join();
    }

    std::size_t best = cells;
    for (std::size_t c = 0; c < cells; ++c)
        if (std::isfinite(trace.runs[c].v) && (best == cells || trace.runs[c].v < trace.runs[best].v))
            best = c;
    if (best == cells) throw NumericError("deepmatch: every (phi, run) cell degenerated");
    trace.selected = best;
    trace.selected_v = trace.runs[best].v;

    WeightProvenance prov{"deepmatch", config.hash(), trace.runs[best].phi, trace.runs[best].run};
    // Renormalize exactly to absorb rounding in the softmax.
    std::vector<double> w = std::move(weights[best]);
    double s = 0.0;
    for (double v : w) s += v;
    for (double& v : w) v *= static_cast<double>(data.n_treated()) / s;
    return {BalanceWeights(std::move(w), WeightConvention::TreatedCount, data.n_treated(), prov),
            std::move(trace)};
}

}  // namespace deepmatch
