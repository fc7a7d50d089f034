#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace deepmatch {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment estimates and step counter for one parameter block.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Descends along `grads`: params -= lr * mhat / (sqrt(vhat) + eps).
/// To ascend, pass the negated gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate, const AdamHyper& hyper = {});

}  // namespace deepmatch
