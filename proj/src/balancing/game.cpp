#include "deepmatch/balancing/game.hpp"

#include <algorithm>
#include <cmath>

#include "deepmatch/distances/losses.hpp"
#include "deepmatch/error.hpp"

namespace deepmatch {

double clamped_exp(double g) { return std::exp(std::clamp(g, -kExpClamp, kExpClamp)); }

UnitTerm unit_term(bool treated, double f_out, double g_out, const GameParams& p) {
    const double inv_n1 = 1.0 / static_cast<double>(p.n_treated);
    UnitTerm u;
    if (treated) {
        u.value = inv_n1 * link_loss(f_out);
        u.d_f = inv_n1 * link_loss_slope(f_out);
        return u;
    }
    const double w = clamped_exp(g_out);
    const double inside = std::abs(g_out) < kExpClamp ? 1.0 : 0.0;
    const double l = link_loss(-f_out);
    u.value = inv_n1 * w * l + p.lambda * inv_n1 * inv_n1 * w * w + p.phi * inv_n1 * w;
    u.d_f = -inv_n1 * w * link_loss_slope(-f_out);
    u.d_g = inside * (inv_n1 * w * l + 2.0 * p.lambda * inv_n1 * inv_n1 * w * w +
                      p.phi * inv_n1 * w);
    if (!std::isfinite(u.value) || !std::isfinite(u.d_f) || !std::isfinite(u.d_g))
        throw NumericError("game term is not finite");
    return u;
}

GameTerms game_terms(const Network& f, const Network& g, const Dataset& data, std::size_t i,
                     const GameParams& p) {
    GameTerms out;
    out.grad_f.assign(f.num_params(), 0.0);
    out.grad_g.assign(g.num_params(), 0.0);
    ForwardCache fc, gc;
    const double fo = forward(f, data.row(i), fc);
    const bool tr = data.treated(i);
    const double go = tr ? 0.0 : forward(g, data.row(i), gc);
    const UnitTerm u = unit_term(tr, fo, go, p);
    out.value = u.value;
    backward(f, fc, u.d_f, out.grad_f);
    if (!tr && u.d_g != 0.0) backward(g, gc, u.d_g, out.grad_g);
    return out;
}

double game_batch(const Network& f, const Network& g, const Dataset& data,
                  std::span<const std::size_t> batch, const GameParams& p,
                  std::span<double> grad_f, std::span<double> grad_g, GameWorkspace& ws) {
    const bool want = !grad_f.empty();
    if (want) {
        if (grad_f.size() != f.num_params() || grad_g.size() != g.num_params())
            throw DimensionError("game_batch: gradient buffers have the wrong size");
        std::fill(grad_f.begin(), grad_f.end(), 0.0);
        std::fill(grad_g.begin(), grad_g.end(), 0.0);
    }
    double total = 0.0;
    for (std::size_t i : batch) {
        const bool tr = data.treated(i);
        const double fo = forward(f, data.row(i), ws.f_cache);
        const double go = tr ? 0.0 : forward(g, data.row(i), ws.g_cache);
        const UnitTerm u = unit_term(tr, fo, go, p);
        total += u.value;
        if (want) {
            backward(f, ws.f_cache, u.d_f, grad_f);
            if (!tr && u.d_g != 0.0) backward(g, ws.g_cache, u.d_g, grad_g);
        }
    }
    total -= 0.5 * p.psi * f.regularizer();
    if (want && p.psi != 0.0) f.add_regularizer_gradient(-0.5 * p.psi, grad_f);
    return total;
}

std::vector<double> normalized_weights(const Network& g, const Dataset& data) {
    const auto ctrl = data.control_indices();
    std::vector<double> gs(ctrl.size());
    for (std::size_t k = 0; k < ctrl.size(); ++k)
        gs[k] = std::clamp(forward(g, data.row(ctrl[k])), -kExpClamp, kExpClamp);
    const double top = *std::max_element(gs.begin(), gs.end());
    double s = 0.0;
    for (double& v : gs) s += (v = std::exp(v - top));
    const double n1 = static_cast<double>(data.n_treated());
    for (double& v : gs) v *= n1 / s;
    return gs;
}

double raw_weight_sum(const Network& g, const Dataset& data) {
    double s = 0.0;
    for (std::size_t i : data.control_indices()) s += clamped_exp(forward(g, data.row(i)));
    return s;
}

double stage2_batch(const Network& f, const Dataset& data, std::span<const double> full_weights,
                    std::span<const std::size_t> batch, double psi, std::size_t n_treated,
                    std::span<double> grad_f, ForwardCache& cache) {
    if (full_weights.size() != data.size()) throw DimensionError("one weight per unit");
    const bool want = !grad_f.empty();
    if (want) std::fill(grad_f.begin(), grad_f.end(), 0.0);
    const double inv_n1 = 1.0 / static_cast<double>(n_treated);
    double total = 0.0;
    for (std::size_t i : batch) {
        const double s = data.treated(i) ? 1.0 : -1.0;
        const double z = s * forward(f, data.row(i), cache);
        const double w = full_weights[i] * inv_n1;
        total += w * link_loss(z);
        if (want) backward(f, cache, w * s * link_loss_slope(z), grad_f);
    }
    total -= 0.5 * psi * f.regularizer();
    if (want && psi != 0.0) f.add_regularizer_gradient(-0.5 * psi, grad_f);
    return total;
}

double selection_score(const Network& f, const Dataset& data,
                       std::span<const double> full_weights, double psi, double lambda) {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    ForwardCache cache;
    double v = stage2_batch(f, data, full_weights, all, psi, data.n_treated(), {}, cache);
    const double n1 = static_cast<double>(data.n_treated());
    double sq = 0.0;
    for (std::size_t i : data.control_indices()) sq += full_weights[i] * full_weights[i];
    return v + lambda * sq / (n1 * n1);
}

std::vector<std::size_t> batch_bounds(std::size_t n, std::size_t batch_size) {
    if (batch_size == 0) throw PreconditionError("batch size must be positive");
    const std::size_t m = (n + batch_size - 1) / batch_size;
    std::vector<std::size_t> b{0};
    if (m == 0) return b;
    const std::size_t base = n / m, extra = n % m;
    for (std::size_t j = 0; j < m; ++j) b.push_back(b.back() + base + (j < extra ? 1 : 0));
    return b;
}

}  // namespace deepmatch
