#include "neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deepmatch/distances/losses.hpp"
#include "deepmatch/numerics/adam.hpp"

namespace deepmatch::detail {
namespace {

struct Row {
    const WeightedSample* sample;
    std::size_t index;
    double sign;
};

double objective(const Network& net, const std::vector<Row>& rows, double psi) {
    double v = 0.0;
    for (const Row& r : rows)
        v += r.sample->weight(r.index) * link_loss(r.sign * forward(net, r.sample->point(r.index)));
    return v - 0.5 * psi * net.regularizer();
}

}  // namespace

DDResult dd_neural(const NeuralClass& cls, const WeightedSample& plus,
                   const WeightedSample& minus, double psi) {
    const NeuralTraining& tr = cls.training;
    if (cls.architecture.input_size() != plus.dim())
        throw DimensionError("neural discriminator input size does not match the samples");
    if (cls.architecture.layers.empty() ||
        cls.architecture.layers.back().activation != Activation::Identity)
        throw PreconditionError("neural discriminator output must be an identity unit");
    if (tr.epochs < 1 || tr.batch_size == 0 || !(tr.learning_rate > 0.0))
        throw PreconditionError("neural training needs epochs, batch size and rate > 0");

    std::vector<Row> rows;
    for (std::size_t i = 0; i < plus.size(); ++i) rows.push_back({&plus, i, 1.0});
    for (std::size_t i = 0; i < minus.size(); ++i) rows.push_back({&minus, i, -1.0});
    const double n = static_cast<double>(rows.size());

    RngStream rng(tr.seed, tr.stream);
    Network net(cls.architecture);
    net.initialize(rng);
    AdamState adam(net.num_params());
    std::vector<double> grad(net.num_params());
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    ForwardCache cache;

    Network best = net;
    double best_value = objective(net, rows, psi);
    int steps = 0;
    for (int epoch = 0; epoch < tr.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += tr.batch_size) {
            const std::size_t stop = std::min(order.size(), start + tr.batch_size);
            const double scale = n / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            // Adam minimizes, so accumulate the gradient of the negated objective.
            for (std::size_t b = start; b < stop; ++b) {
                const Row& r = rows[order[b]];
                const double z = r.sign * forward(net, r.sample->point(r.index), cache);
                const double up = -scale * r.sample->weight(r.index) * r.sign * link_loss_slope(z);
                backward(net, cache, up, grad);
            }
            net.add_regularizer_gradient(0.5 * psi, grad);
            adam_step(net.params(), grad, adam, tr.learning_rate);
            ++steps;
        }
        const double v = objective(net, rows, psi);
        if (v > best_value) {
            best_value = v;
            best = net;
        }
    }

    DDResult r;
    r.squared_value = std::max(best_value, 0.0);
    r.value = std::sqrt(r.squared_value);
    r.scale = 1.0;
    r.discriminator = NeuralDiscriminator{std::move(best)};
    r.status = SolverStatus::Converged;
    r.iterations = steps;
    return r;
}

}  // namespace deepmatch::detail
