#pragma once

// Small fixed-architecture feed-forward networks with hand-written
// layer-wise backpropagation. Supports dense layers and valid-padding,
// stride-1 2-D convolutions; the final layer is always a single dense unit.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "deepmatch/numerics/rng.hpp"

namespace deepmatch {

enum class Activation { Relu, Identity, Exp, Sigmoid };

enum class LayerKind { Dense, Conv2d };

/// Pre-activations of an exponential output are clamped to this magnitude so
/// that both e^g and e^{2g} stay finite.
inline constexpr double kExpClamp = 30.0;

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    std::size_t width = 1;   // units (dense) or output channels (conv)
    std::size_t kernel = 0;  // conv only: square kernel side
    Activation activation = Activation::Relu;
};

struct Architecture {
    std::size_t in_channels = 1;
    std::size_t in_height = 1;
    std::size_t in_width = 1;
    std::vector<LayerSpec> layers;

    std::size_t input_size() const { return in_channels * in_height * in_width; }

    /// Fully connected net on a flat input: `hidden` rectifier layers followed
    /// by one output unit with the given activation.
    static Architecture mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                            Activation output);

    /// Conv(c1, k) -> ReLU -> Conv(c2, k) -> ReLU -> Dense(dense) -> ReLU -> Dense(1).
    static Architecture cnn(std::size_t height, std::size_t width, std::size_t c1,
                            std::size_t c2, std::size_t kernel, std::size_t dense,
                            Activation output);

    std::string describe() const;
};

/// Resolved geometry and parameter offsets of one layer.
struct LayerLayout {
    LayerKind kind;
    Activation activation;
    std::size_t in_c, in_h, in_w;
    std::size_t out_c, out_h, out_w;
    std::size_t kernel;
    std::size_t rows;  // weight-matrix rows: output units / output channels
    std::size_t cols;  // weight-matrix cols: input units / in_c * k * k
    std::size_t weight_offset;
    std::size_t bias_offset;

    std::size_t in_size() const { return in_c * in_h * in_w; }
    std::size_t out_size() const { return out_c * out_h * out_w; }
    std::size_t weight_count() const { return rows * cols; }
};

/// Architecture plus all parameters in one flat buffer. Gradients use the
/// same flat layout, so optimizers and checkers work on plain spans.
class Network {
public:
    explicit Network(Architecture arch);

    const Architecture& architecture() const { return arch_; }
    const std::vector<LayerLayout>& layers() const { return layout_; }

    std::size_t input_size() const { return arch_.input_size(); }
    std::size_t num_params() const { return params_.size(); }
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    std::span<double> weights(std::size_t layer);
    std::span<const double> weights(std::size_t layer) const;
    std::span<double> bias(std::size_t layer);
    std::span<const double> bias(std::size_t layer) const;

    /// Scaled-Gaussian fan-in initialization: std sqrt(2/fan_in) for
    /// rectifier layers, sqrt(1/fan_in) otherwise; biases zero.
    void initialize(RngStream& rng);

    /// Sum of squared weight-matrix entries (biases excluded).
    double regularizer() const;
    /// grad += coeff * dR/dtheta.
    void add_regularizer_gradient(double coeff, std::span<double> grad) const;

private:
    Architecture arch_;
    std::vector<LayerLayout> layout_;
    std::vector<double> params_;
};

/// Per-sample activations kept for the backward pass. Reusable across calls.
struct ForwardCache {
    std::vector<std::vector<double>> pre;      // pre-activation per layer
    std::vector<std::vector<double>> post;     // post-activation per layer
    std::vector<std::vector<double>> patches;  // im2col buffers for conv layers
    std::vector<double> input;
    double output = 0.0;
    // Scratch used by backward().
    std::vector<double> delta, delta_in, patch_grad;
};

double forward(const Network& net, std::span<const double> x);
double forward(const Network& net, std::span<const double> x, ForwardCache& cache);

/// grad += upstream * d(output)/d(params), using activations in `cache`.
void backward(const Network& net, ForwardCache& cache, double upstream,
              std::span<double> grad);

/// Fresh gradient of upstream * net(x).
std::vector<double> net_gradient(const Network& net, std::span<const double> x,
                                 double upstream);

}  // namespace deepmatch
