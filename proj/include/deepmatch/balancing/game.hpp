#pragma once

// Per-unit terms of the weighting game
//   L_phi(g, f) = sum_i u_i(f, g) - (psi/2) R(f)
// with u_i = (1/n1) l(f(X_i)) for treated units and
//   u_i = (1/n1) e^g l(-f(X_i)) + (lambda/n1^2) e^{2g} + (phi/n1) e^g
// for controls, where g = g(X_i) is the weight network's output.

#include <span>
#include <vector>

#include "deepmatch/estimators/dataset.hpp"
#include "deepmatch/numerics/network.hpp"

namespace deepmatch {

struct GameParams {
    double psi = 0.0;
    double lambda = 0.0;
    double phi = 0.0;
    std::size_t n_treated = 1;
};

/// e^g with g clamped to [-kExpClamp, kExpClamp].
double clamped_exp(double g);

/// u_i and its partial derivatives in the two network outputs.
struct UnitTerm {
    double value = 0.0;
    double d_f = 0.0;
    double d_g = 0.0;  // zero for treated units and outside the clamp
};

UnitTerm unit_term(bool treated, double f_out, double g_out, const GameParams& p);

struct GameTerms {
    double value = 0.0;
    std::vector<double> grad_f;
    std::vector<double> grad_g;
};

/// u_i with full parameter gradients for unit i. The regularizer is not
/// included (it is a batch-level term).
GameTerms game_terms(const Network& f, const Network& g, const Dataset& data, std::size_t i,
                     const GameParams& p);

/// Reusable per-thread buffers for batch evaluations.
struct GameWorkspace {
    ForwardCache f_cache;
    ForwardCache g_cache;
};

/// sum_{i in batch} u_i - (psi/2) R(f). When the gradient spans are
/// non-empty they are overwritten with dL/dtheta_f and dL/dtheta_g.
double game_batch(const Network& f, const Network& g, const Dataset& data,
                  std::span<const std::size_t> batch, const GameParams& p,
                  std::span<double> grad_f, std::span<double> grad_g, GameWorkspace& ws);

/// Control weights n1 e^{g_i} / sum_j e^{g_j} (clamped g), in control order.
std::vector<double> normalized_weights(const Network& g, const Dataset& data);

/// Raw weight sum sum_control e^{g(X_i)}.
double raw_weight_sum(const Network& g, const Dataset& data);

/// Second-stage discriminator objective on fixed weights W (length n,
/// treated entries 1): (1/n1) sum_{i in batch} W_i l_i(f) - (psi/2) R(f).
/// `grad_f` (if non-empty) is overwritten with its gradient.
double stage2_batch(const Network& f, const Dataset& data, std::span<const double> full_weights,
                    std::span<const std::size_t> batch, double psi, std::size_t n_treated,
                    std::span<double> grad_f, ForwardCache& cache);

/// Model-selection score over all units:
///   (1/n1) sum_i W_i l_i(f) - (psi/2) R(f) + (lambda/n1^2) sum_control W_i^2.
double selection_score(const Network& f, const Dataset& data,
                       std::span<const double> full_weights, double psi, double lambda);

/// Splits a permutation of 0..n-1 into ceil(n/B) consecutive batches whose
/// sizes differ by at most one. Returns batch start offsets plus n.
std::vector<std::size_t> batch_bounds(std::size_t n, std::size_t batch_size);

}  // namespace deepmatch
