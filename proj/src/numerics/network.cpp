#include "deepmatch/numerics/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deepmatch/error.hpp"
#include "deepmatch/numerics/kernels.hpp"

namespace deepmatch {
namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Identity: return z;
        case Activation::Exp: return std::exp(std::clamp(z, -kExpClamp, kExpClamp));
        case Activation::Sigmoid:
            return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    return z;
}

// d post / d pre, written in terms of both values.
double activation_slope(Activation a, double pre, double post) {
    switch (a) {
        case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Identity: return 1.0;
        case Activation::Exp: return (pre > -kExpClamp && pre < kExpClamp) ? post : 0.0;
        case Activation::Sigmoid: return post * (1.0 - post);
    }
    return 1.0;
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Identity: return "identity";
        case Activation::Exp: return "exp";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

// Gather kernel x kernel patches of a channel-major (c, h, w) image into rows
// of `patches`, one row per output position.
void im2col(const LayerLayout& l, std::span<const double> in, std::vector<double>& patches) {
    const std::size_t k = l.kernel;
    patches.resize(l.out_h * l.out_w * l.cols);
    double* dst = patches.data();
    for (std::size_t oy = 0; oy < l.out_h; ++oy) {
        for (std::size_t ox = 0; ox < l.out_w; ++ox) {
            for (std::size_t c = 0; c < l.in_c; ++c) {
                const double* plane = in.data() + c * l.in_h * l.in_w;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const double* src = plane + (oy + ky) * l.in_w + ox;
                    std::copy(src, src + k, dst);
                    dst += k;
                }
            }
        }
    }
}

void col2im_acc(const LayerLayout& l, std::size_t pos, std::span<const double> patch_grad,
                std::span<double> in_grad) {
    const std::size_t k = l.kernel;
    const std::size_t oy = pos / l.out_w;
    const std::size_t ox = pos % l.out_w;
    const double* src = patch_grad.data();
    for (std::size_t c = 0; c < l.in_c; ++c) {
        double* plane = in_grad.data() + c * l.in_h * l.in_w;
        for (std::size_t ky = 0; ky < k; ++ky) {
            double* row = plane + (oy + ky) * l.in_w + ox;
            for (std::size_t kx = 0; kx < k; ++kx) row[kx] += src[kx];
            src += k;
        }
    }
}

}  // namespace

Architecture Architecture::mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                               Activation output) {
    Architecture a;
    a.in_width = input_dim;
    for (std::size_t h : hidden) a.layers.push_back({LayerKind::Dense, h, 0, Activation::Relu});
    a.layers.push_back({LayerKind::Dense, 1, 0, output});
    return a;
}

Architecture Architecture::cnn(std::size_t height, std::size_t width, std::size_t c1,
                               std::size_t c2, std::size_t kernel, std::size_t dense,
                               Activation output) {
    Architecture a;
    a.in_height = height;
    a.in_width = width;
    a.layers.push_back({LayerKind::Conv2d, c1, kernel, Activation::Relu});
    a.layers.push_back({LayerKind::Conv2d, c2, kernel, Activation::Relu});
    a.layers.push_back({LayerKind::Dense, dense, 0, Activation::Relu});
    a.layers.push_back({LayerKind::Dense, 1, 0, output});
    return a;
}

std::string Architecture::describe() const {
    std::ostringstream os;
    os << "in[" << in_channels << "x" << in_height << "x" << in_width << "]";
    for (const auto& l : layers) {
        if (l.kind == LayerKind::Conv2d)
            os << " conv" << l.kernel << "x" << l.kernel << ":" << l.width;
        else
            os << " dense:" << l.width;
        os << "/" << activation_name(l.activation);
    }
    return os.str();
}

Network::Network(Architecture arch) : arch_(std::move(arch)) {
    if (arch_.layers.empty()) throw PreconditionError("network needs at least one layer");
    if (arch_.input_size() == 0) throw PreconditionError("network input size is zero");
    const LayerSpec& last = arch_.layers.back();
    if (last.kind != LayerKind::Dense || last.width != 1)
        throw PreconditionError("network output layer must be a single dense unit");

    std::size_t c = arch_.in_channels, h = arch_.in_height, w = arch_.in_width;
    std::size_t offset = 0;
    bool flat = false;
    for (const auto& spec : arch_.layers) {
        LayerLayout l{};
        l.kind = spec.kind;
        l.activation = spec.activation;
        l.in_c = c;
        l.in_h = h;
        l.in_w = w;
        if (spec.kind == LayerKind::Conv2d) {
            if (flat) throw PreconditionError("convolution after a dense layer");
            if (spec.kernel == 0 || spec.kernel > h || spec.kernel > w)
                throw PreconditionError("convolution kernel does not fit its input");
            l.kernel = spec.kernel;
            l.out_c = spec.width;
            l.out_h = h - spec.kernel + 1;
            l.out_w = w - spec.kernel + 1;
            l.rows = spec.width;
            l.cols = c * spec.kernel * spec.kernel;
        } else {
            flat = true;
            l.kernel = 0;
            l.out_c = spec.width;
            l.out_h = 1;
            l.out_w = 1;
            l.rows = spec.width;
            l.cols = c * h * w;
        }
        if (l.rows == 0) throw PreconditionError("layer with zero width");
        l.weight_offset = offset;
        offset += l.rows * l.cols;
        l.bias_offset = offset;
        offset += l.rows;
        c = l.out_c;
        h = l.out_h;
        w = l.out_w;
        layout_.push_back(l);
    }
    params_.assign(offset, 0.0);
}

std::span<double> Network::weights(std::size_t layer) {
    const auto& l = layout_.at(layer);
    return std::span<double>(params_).subspan(l.weight_offset, l.weight_count());
}
std::span<const double> Network::weights(std::size_t layer) const {
    const auto& l = layout_.at(layer);
    return std::span<const double>(params_).subspan(l.weight_offset, l.weight_count());
}
std::span<double> Network::bias(std::size_t layer) {
    const auto& l = layout_.at(layer);
    return std::span<double>(params_).subspan(l.bias_offset, l.rows);
}
std::span<const double> Network::bias(std::size_t layer) const {
    const auto& l = layout_.at(layer);
    return std::span<const double>(params_).subspan(l.bias_offset, l.rows);
}

void Network::initialize(RngStream& rng) {
    for (std::size_t i = 0; i < layout_.size(); ++i) {
        const auto& l = layout_[i];
        // Glorot uniform, zero biases.
        const double fan_in = static_cast<double>(l.cols);
        const double fan_out = static_cast<double>(
            l.kind == LayerKind::Conv2d ? l.rows * l.kernel * l.kernel : l.rows);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : weights(i)) w = rng.uniform(-limit, limit);
        for (double& b : bias(i)) b = 0.0;
    }
}

double Network::regularizer() const {
    double r = 0.0;
    for (std::size_t i = 0; i < layout_.size(); ++i) r += kernels::sum_squares(weights(i));
    return r;
}

void Network::add_regularizer_gradient(double coeff, std::span<double> grad) const {
    if (grad.size() != params_.size()) throw DimensionError("regularizer gradient size");
    for (std::size_t i = 0; i < layout_.size(); ++i) {
        const auto& l = layout_[i];
        kernels::axpy(2.0 * coeff, weights(i), grad.subspan(l.weight_offset, l.weight_count()));
    }
}

double forward(const Network& net, std::span<const double> x, ForwardCache& cache) {
    if (x.size() != net.input_size())
        throw DimensionError("network input has " + std::to_string(x.size()) +
                             " entries, expected " + std::to_string(net.input_size()));
    const auto& layers = net.layers();
    cache.pre.resize(layers.size());
    cache.post.resize(layers.size());
    cache.patches.resize(layers.size());
    cache.input.assign(x.begin(), x.end());

    std::span<const double> in = cache.input;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& l = layers[li];
        auto& pre = cache.pre[li];
        auto& post = cache.post[li];
        pre.resize(l.out_size());
        post.resize(l.out_size());
        const auto w = net.weights(li);
        const auto b = net.bias(li);
        if (l.kind == LayerKind::Dense) {
            kernels::gemv(w, l.rows, l.cols, in, pre);
            for (std::size_t o = 0; o < l.rows; ++o) pre[o] += b[o];
        } else {
            im2col(l, in, cache.patches[li]);
            const std::size_t positions = l.out_h * l.out_w;
            const std::span<const double> patches = cache.patches[li];
            for (std::size_t oc = 0; oc < l.out_c; ++oc) {
                const auto wrow = w.subspan(oc * l.cols, l.cols);
                double* out = pre.data() + oc * positions;
                for (std::size_t p = 0; p < positions; ++p)
                    out[p] = kernels::dot(wrow, patches.subspan(p * l.cols, l.cols)) + b[oc];
            }
        }
        for (std::size_t o = 0; o < pre.size(); ++o) post[o] = activate(l.activation, pre[o]);
        in = post;
    }
    cache.output = cache.post.back()[0];
    return cache.output;
}

double forward(const Network& net, std::span<const double> x) {
    ForwardCache cache;
    return forward(net, x, cache);
}

void backward(const Network& net, ForwardCache& cache, double upstream, std::span<double> grad) {
    if (grad.size() != net.num_params()) throw DimensionError("gradient buffer size");
    if (upstream == 0.0) return;
    const auto& layers = net.layers();
    auto& delta = cache.delta;     // d out / d post of current layer, then d/d pre
    auto& delta_in = cache.delta_in;

    delta.assign(1, upstream);
    for (std::size_t li = layers.size(); li-- > 0;) {
        const auto& l = layers[li];
        const auto& pre = cache.pre[li];
        const auto& post = cache.post[li];
        for (std::size_t o = 0; o < delta.size(); ++o)
            delta[o] *= activation_slope(l.activation, pre[o], post[o]);

        const std::span<const double> in = li == 0 ? std::span<const double>(cache.input)
                                                   : std::span<const double>(cache.post[li - 1]);
        auto gw = grad.subspan(l.weight_offset, l.weight_count());
        auto gb = grad.subspan(l.bias_offset, l.rows);
        const auto w = net.weights(li);
        delta_in.assign(li == 0 ? 0 : l.in_size(), 0.0);

        if (l.kind == LayerKind::Dense) {
            for (std::size_t o = 0; o < l.rows; ++o) gb[o] += delta[o];
            kernels::ger_acc(delta, in, gw, l.rows, l.cols);
            if (li > 0) kernels::gemv_t_acc(w, l.rows, l.cols, delta, delta_in);
        } else {
            const std::size_t positions = l.out_h * l.out_w;
            const std::span<const double> patches = cache.patches[li];
            auto& pg = cache.patch_grad;
            pg.resize(l.cols);
            std::vector<double> dcol(l.out_c);
            for (std::size_t p = 0; p < positions; ++p) {
                bool any = false;
                for (std::size_t oc = 0; oc < l.out_c; ++oc) {
                    dcol[oc] = delta[oc * positions + p];
                    any = any || dcol[oc] != 0.0;
                }
                if (!any) continue;
                for (std::size_t oc = 0; oc < l.out_c; ++oc) gb[oc] += dcol[oc];
                const auto patch = patches.subspan(p * l.cols, l.cols);
                kernels::ger_acc(dcol, patch, gw, l.rows, l.cols);
                if (li > 0) {
                    std::fill(pg.begin(), pg.end(), 0.0);
                    kernels::gemv_t_acc(w, l.rows, l.cols, dcol, pg);
                    col2im_acc(l, p, pg, delta_in);
                }
            }
        }
        std::swap(delta, delta_in);
    }
}

std::vector<double> net_gradient(const Network& net, std::span<const double> x,
                                 double upstream) {
    ForwardCache cache;
    forward(net, x, cache);
    std::vector<double> grad(net.num_params(), 0.0);
    backward(net, cache, upstream, grad);
    return grad;
}

}  // namespace deepmatch
