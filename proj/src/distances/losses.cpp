#include "deepmatch/distances/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "deepmatch/error.hpp"

namespace deepmatch {
namespace {

// log(1 + e^u) without overflow.
double softplus(double u) { return (u > 0.0 ? u : 0.0) + std::log1p(std::exp(-std::abs(u))); }

}  // namespace

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double link_loss(double z) { return std::numbers::ln2 - softplus(-z); }

double link_loss_slope(double z) { return sigmoid(-z); }

double link_loss_curvature(double z) { return -sigmoid(z) * sigmoid(-z); }

double binary_entropy_gap(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw PreconditionError("binary_entropy_gap: p = " + std::to_string(p) +
                                " outside [0, 1]");
    const double a = p > 0.0 ? p * std::log(p) : 0.0;
    const double b = p < 1.0 ? (1.0 - p) * std::log1p(-p) : 0.0;
    return a + b + std::numbers::ln2;
}

double binary_entropy_gap_slope(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace deepmatch
