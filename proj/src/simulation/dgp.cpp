#include "deepmatch/simulation/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deepmatch/error.hpp"

namespace deepmatch {

namespace {

template <class... F>
struct Overload : F... {
    using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

Simulation shallow(const ShallowSpec& s, RngStream& rng) {
    DenseMatrix x(static_cast<Eigen::Index>(s.n), 2);
    std::vector<int> t(s.n);
    std::vector<double> y0(s.n), y1(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 0) = rng.uniform(-1.0, 1.0);
        x(r, 1) = rng.uniform(-1.0, 1.0);
        const double e = x(r, 0) + x(r, 1) > 0.0 ? 0.9 : 0.1;
        t[i] = rng.bernoulli(e) ? 1 : 0;
        y0[i] = y1[i] = std::exp(x(r, 0) + x(r, 1)) + rng.normal();
    }
    std::vector<double> y(s.n);
    for (std::size_t i = 0; i < s.n; ++i) y[i] = t[i] ? y1[i] : y0[i];
    return {Dataset(std::move(x), std::move(t), std::move(y)), std::move(y0), std::move(y1),
            DenseMatrix(static_cast<Eigen::Index>(s.n), 0), {}};
}

Simulation fully_connected(const FullyConnectedSpec& s, RngStream& rng) {
    constexpr int d = 6;
    const auto n = static_cast<Eigen::Index>(s.n);
    DenseMatrix x(n, d), xh(n, 1);
    std::vector<int> t(s.n);
    std::vector<double> y0(s.n), y1(s.n), y(s.n);
    for (Eigen::Index i = 0; i < n; ++i) {
        int parity = 0;
        double total = 0.0;
        for (int j = 0; j < d; ++j) {
            x(i, j) = rng.uniform(-2.0, 2.0);
            parity ^= x(i, j) > 0.0 ? 1 : 0;
            total += x(i, j);
        }
        const auto k = static_cast<std::size_t>(i);
        t[k] = rng.bernoulli(parity ? 0.95 : 0.05) ? 1 : 0;
        const double eps = rng.normal();
        y0[k] = std::exp(total) + eps;
        y1[k] = y0[k] + total - 1.0;
        y[k] = t[k] ? y1[k] : y0[k];
        xh(i, 0) = total;
    }
    return {Dataset(std::move(x), std::move(t), std::move(y)), std::move(y0), std::move(y1),
            std::move(xh), {}};
}

Simulation convolutional(const ConvolutionalSpec& s, RngStream& rng) {
    const ImageStore& store = *s.images;
    std::array<std::size_t, 10> available{};
    for (int dgt = 0; dgt < 10; ++dgt) available[dgt] = store.with_label(static_cast<std::uint8_t>(dgt)).size();

    std::vector<int> digits(s.n);
    std::vector<std::size_t> picks(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const auto dgt = rng.uniform_index(10);
        if (available[dgt] == 0)
            throw PreconditionError("image store has no images of digit " + std::to_string(dgt));
        digits[i] = static_cast<int>(dgt);
        const auto& pool = store.with_label(static_cast<std::uint8_t>(dgt));
        picks[i] = pool[rng.uniform_index(pool.size())];
    }

    const std::size_t r2 = store.rows() / s.downscale, c2 = store.cols() / s.downscale;
    const auto n = static_cast<Eigen::Index>(s.n);
    DenseMatrix x(n, static_cast<Eigen::Index>(r2 * c2)), xh(n, 1);
    std::vector<double> bright(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const auto img = s.downscale == 1
                             ? std::vector<double>(store.image(picks[i]).begin(), store.image(picks[i]).end())
                             : downscale(store.image(picks[i]), store.rows(), store.cols(), s.downscale);
        for (std::size_t k = 0; k < img.size(); ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = img[k];
        bright[i] = store.brightness(picks[i]);
        xh(static_cast<Eigen::Index>(i), 0) = bright[i];
    }

    std::vector<int> t(s.n, 0);
    for (int dgt = 0; dgt < 10; ++dgt) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < s.n; ++i)
            if (digits[i] == dgt) members.push_back(i);
        if (members.empty()) continue;
        const double want = s.treated_fraction[static_cast<std::size_t>(dgt)] * static_cast<double>(members.size());
        const auto k = static_cast<std::size_t>(std::llround(want));
        if (s.treated_fraction[static_cast<std::size_t>(dgt)] > 0.0 &&
            s.treated_fraction[static_cast<std::size_t>(dgt)] < 1.0 && members.size() < 2)
            throw PreconditionError("too few images of digit " + std::to_string(dgt) +
                                    " for quantile assignment");
        std::stable_sort(members.begin(), members.end(),
                         [&](std::size_t a, std::size_t b) { return bright[a] < bright[b]; });
        for (std::size_t j = 0; j < k && j < members.size(); ++j) t[members[j]] = 1;
    }

    std::vector<double> y0(s.n), y1(s.n), y(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double eps = static_cast<double>(rng.uniform_index(3)) - 1.0;
        y0[i] = std::clamp(static_cast<double>(digits[i]) + eps, 0.0, 9.0);
        y1[i] = y0[i] + bright[i] - 1.0;
        y[i] = t[i] ? y1[i] : y0[i];
    }
    return {Dataset(std::move(x), std::move(t), std::move(y)), std::move(y0), std::move(y1),
            std::move(xh), std::move(digits)};
}

}  // namespace

std::string dgp_name(const DgpSpec& spec) {
    return std::visit(Overload{[](const ShallowSpec&) { return std::string("shallow"); },
                               [](const FullyConnectedSpec&) { return std::string("fc"); },
                               [](const ConvolutionalSpec&) { return std::string("conv"); }},
                      spec);
}

std::size_t dgp_size(const DgpSpec& spec) {
    return std::visit([](const auto& s) { return s.n; }, spec);
}

void validate(const DgpSpec& spec) {
    if (dgp_size(spec) < 4) throw PreconditionError("dgp: n must be at least 4");
    if (const auto* c = std::get_if<ConvolutionalSpec>(&spec)) {
        if (!c->images || c->images->size() == 0)
            throw PreconditionError("convolutional dgp needs a loaded image store");
        if (c->downscale == 0 || c->images->rows() % c->downscale || c->images->cols() % c->downscale)
            throw PreconditionError("downscale factor must divide both image sides");
        for (double f : c->treated_fraction)
            if (!(f >= 0.0 && f <= 1.0)) throw PreconditionError("treated fractions must lie in [0,1]");
    }
}

double Simulation::sample_att() const {
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.treated(i)) continue;
        s += y1[i] - y0[i];
        ++k;
    }
    if (k == 0) throw PreconditionError("sample ATT undefined without treated units");
    return s / static_cast<double>(k);
}

Simulation generate(const DgpSpec& spec, RngStream& rng) {
    validate(spec);
    return std::visit(Overload{[&](const ShallowSpec& s) { return shallow(s, rng); },
                               [&](const FullyConnectedSpec& s) { return fully_connected(s, rng); },
                               [&](const ConvolutionalSpec& s) { return convolutional(s, rng); }},
                      spec);
}

double true_att(const DgpSpec& spec, const Simulation* sample) {
    if (std::holds_alternative<ShallowSpec>(spec)) return 0.0;
    if (std::holds_alternative<FullyConnectedSpec>(spec)) return -1.0;
    if (!sample) throw PreconditionError("convolutional truth is per sample; pass the generated data");
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < sample->data.size(); ++i) {
        if (!sample->data.treated(i)) continue;
        s += sample->xh(static_cast<Eigen::Index>(i), 0);
        ++k;
    }
    if (k == 0) throw PreconditionError("no treated units in the sample");
    return s / static_cast<double>(k) - 1.0;
}

}  // namespace deepmatch
