#include "deepmatch/numerics/adam.hpp"

#include <cmath>

#include "deepmatch/error.hpp"
#include "deepmatch/numerics/kernels.hpp"

namespace deepmatch {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate, const AdamHyper& hyper) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size())
        throw DimensionError("adam_step: parameter, gradient and state sizes differ");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(hyper.beta1, t);
    const double bias2 = 1.0 - std::pow(hyper.beta2, t);
    kernels::adam_update(params, grads, state.m, state.v, learning_rate, hyper.beta1,
                         hyper.beta2, hyper.eps, bias1, bias2);
}

}  // namespace deepmatch
