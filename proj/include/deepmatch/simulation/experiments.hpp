#pragma once

#include <string>
#include <vector>

#include "deepmatch/balancing/deepmatch.hpp"
#include "deepmatch/estimators/models.hpp"
#include "deepmatch/simulation/replicate.hpp"

namespace deepmatch {

/// Logistic propensities, OLS outcome model, conditional-gradient balancing
/// with the affine discriminator class.
struct ShallowOptions {
    double lambda = 1.0;
    double psi = 0.0;
    int fw_iterations = 200;
    std::vector<std::string> methods;  // empty: all
};

/// Raw, IPW, IPWn, AIPW, AIPWn, OLS, DM, DM-DR.
std::vector<std::string> shallow_methods();
Pipeline shallow_pipeline(const ShallowOptions& options);

/// Neural propensity and outcome models plus adversarial balancing, one
/// DeepMatch fit per lambda. Architectures are filled in from the data when
/// left empty (the default fully connected net).
struct DeepOptions {
    GameConfig game;
    NeuralFitConfig nets;
    std::vector<double> lambdas = {0.0, 0.5};
    bool catt = true;
    std::vector<std::string> methods;  // empty: all
};

/// "DM0", "DM0.5", ...
std::string dm_label(double lambda);
/// ATT: Raw, IPW, IPWn, Regn, AIPW, AIPWn, DM<l>, DM<l>-DR per lambda.
/// CATT: Raw, IPW, IPWn, Regn, DM<l>.
std::vector<std::string> deep_methods(const DeepOptions& options);
Pipeline deep_pipeline(const DeepOptions& options);

/// 4 hidden layers of 2 units for every network.
DeepOptions fc_options();
/// Two valid 5x5 convolutions of depth c1, c2 then a dense layer.
DeepOptions conv_options(std::size_t height, std::size_t width, std::size_t c1 = 8,
                         std::size_t c2 = 16, std::size_t dense = 128);

}  // namespace deepmatch
