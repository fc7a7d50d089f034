#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepmatch/balancing/weights.hpp"
#include "deepmatch/estimators/dataset.hpp"
#include "deepmatch/numerics/network.hpp"

namespace deepmatch {

struct GameConfig {
    double psi = 0.0;
    double lambda = 0.0;
    int epochs_stage1 = 10;  // K1
    int epochs_stage2 = 5;   // K2
    std::size_t batch_size = 100;
    int runs = 5;            // restarts per phi
    double eta = 0.01;       // phi-range tolerance
    std::size_t grid_size = 50;
    double learning_rate = 1e-4;
    /// Both networks need an identity output unit; the weight network's
    /// output is exponentiated inside the game.
    Architecture discriminator;
    Architecture weight_net;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    /// Explicit phi grid; skips phi_range when set.
    std::optional<std::vector<double>> phi_grid;
    /// Epochs per phi_range probe; 0 means max(2, K1 / 5).
    int probe_epochs = 0;

    /// Throws PreconditionError on invalid fields.
    void validate(std::size_t input_dim) const;
    /// FNV-1a over the fields that influence the result.
    std::uint64_t hash() const;
};

/// Mlp with `depth` hidden ReLU layers of `width` units and identity output.
Architecture default_net(std::size_t input_dim, std::size_t depth = 4, std::size_t width = 2);

struct GameRun {
    double phi = 0.0;
    int run = 0;
    double v = 0.0;  // selection score, +inf when the run degenerated
    double raw_weight_sum = 0.0;
    std::vector<double> epoch_objective;   // full-data L_phi after each stage-1 epoch
    std::vector<double> epoch_weight_sum;  // sum_control e^g after each stage-1 epoch
    std::string failure;
};

struct PhiRange {
    double low = 0.0;
    double high = 0.0;
    std::vector<double> grid;
    bool fallback = false;
    bool decreasing = true;  // empirical direction of the weight sum in phi
    std::vector<std::pair<double, double>> probes;  // (phi, raw weight sum)
};

struct GameTrace {
    std::vector<GameRun> runs;
    std::size_t selected = 0;
    double selected_v = 0.0;
    std::optional<PhiRange> range;
};

/// Binary search on log phi for the two phi values whose probe trainings
/// put the raw weight sum at n1/eta and eta*n1. Falls back to [1e-6, 1e6]
/// when the sum never enters the band.
PhiRange phi_range(const Dataset& data, const GameConfig& config);

/// Adversarial balancing: for every phi and restart, simultaneous Adam
/// updates on the game, weight normalization, discriminator-only second
/// stage, full-data selection score; returns the best weights
/// (treated-count convention) and the trace.
std::pair<BalanceWeights, GameTrace> deepmatch_balance(const Dataset& data, const GameConfig& config);

/// One (phi, run) cell; exposed for tests. Returns the run summary and
/// writes the normalized control weights.
GameRun deepmatch_run(const Dataset& data, const GameConfig& config, double phi, int run,
                      std::uint64_t stream, std::vector<double>& control_weights);

}  // namespace deepmatch
