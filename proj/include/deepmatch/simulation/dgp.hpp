#pragma once

#include <array>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "deepmatch/estimators/dataset.hpp"
#include "deepmatch/numerics/rng.hpp"
#include "deepmatch/simulation/idx.hpp"

namespace deepmatch {

/// X ~ U[-1,1]^2, e = 0.1 / 0.9 split by the anti-diagonal, Y = exp(x1+x2) + eps, no effect.
struct ShallowSpec {
    std::size_t n = 300;
};

/// X ~ U[-2,2]^6, treatment odds set by the XOR of coordinate signs,
/// Y(t) = exp(sum X) + t sum X - t + eps.
struct FullyConnectedSpec {
    std::size_t n = 1000;
};

/// Image covariates; treatment by within-sample per-digit brightness rank.
struct ConvolutionalSpec {
    std::size_t n = 1000;
    std::string image_source;                 // informational; the store must be loaded
    std::shared_ptr<const ImageStore> images;
    std::size_t downscale = 1;
    /// Fraction of the lightest images treated, per digit.
    std::array<double, 10> treated_fraction = {0.1, 0.1, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9, 0.9};
};

using DgpSpec = std::variant<ShallowSpec, FullyConnectedSpec, ConvolutionalSpec>;

std::string dgp_name(const DgpSpec& spec);
std::size_t dgp_size(const DgpSpec& spec);
/// Throws PreconditionError on n < 4, fractions outside [0,1], missing store
/// or a downscale factor that does not divide the image.
void validate(const DgpSpec& spec);

struct Simulation {
    Dataset data;
    std::vector<double> y0;
    std::vector<double> y1;
    /// Effect-modifier covariate (n x 1); empty columns for the shallow design.
    DenseMatrix xh;
    /// Labels drawn for the convolutional design, empty otherwise.
    std::vector<int> digits;

    /// Sample ATT: mean over treated of Y(1) - Y(0).
    double sample_att() const;
};

Simulation generate(const DgpSpec& spec, RngStream& rng);

/// Population ATT. The convolutional design has no closed form; pass the
/// generated sample and it returns mean_treated B(X) - 1.
double true_att(const DgpSpec& spec, const Simulation* sample = nullptr);

/// Slope of the CATT as a linear function of xh (1 for both deep designs).
inline constexpr double kTrueCattSlope = 1.0;

}  // namespace deepmatch
