#include "deepmatch/simulation/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "deepmatch/balancing/frank_wolfe.hpp"
#include "deepmatch/estimators/estimators.hpp"

namespace deepmatch {

namespace {

bool wanted(const std::vector<std::string>& methods, const std::string& name) {
    return methods.empty() || std::find(methods.begin(), methods.end(), name) != methods.end();
}

/// Collects estimates, turning exceptions into failed entries.
class Recorder {
public:
    explicit Recorder(const std::vector<std::string>& methods) : methods_(methods) {}

    template <class F>
    void add(const std::string& name, const std::string& target, F&& compute) {
        if (!wanted(methods_, name)) return;
        Estimate e;
        e.method = name;
        e.target = target;
        try {
            e.value = compute();
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        out_.push_back(std::move(e));
    }

    std::vector<Estimate> take() { return std::move(out_); }

private:
    const std::vector<std::string>& methods_;
    std::vector<Estimate> out_;
};

/// Lazily evaluated shared input; a failure is rethrown to every consumer.
template <class T>
class Lazy {
public:
    template <class F>
    const T& get(F&& make) {
        if (!error_.empty()) throw NumericError(error_);
        if (!value_) {
            try {
                value_.emplace(make());
            } catch (const std::exception& e) {
                error_ = e.what();
                throw;
            }
        }
        return *value_;
    }

private:
    std::optional<T> value_;
    std::string error_;
};

}  // namespace

std::vector<std::string> shallow_methods() {
    return {"Raw", "IPW", "IPWn", "AIPW", "AIPWn", "OLS", "DM", "DM-DR"};
}

Pipeline shallow_pipeline(const ShallowOptions& options) {
    return [options](const Simulation& sim, RngStream&) {
        const Dataset& data = sim.data;
        const auto& m = options.methods;
        Recorder rec(m);
        Lazy<PropensityModel> prop;
        Lazy<OutcomeModel> outcome;
        Lazy<BalanceWeights> dm;
        auto e = [&]() -> const PropensityModel& {
            return prop.get([&] { return fit_propensity(data, PropensityKind::Logistic); });
        };
        auto f0 = [&]() -> const OutcomeModel& {
            return outcome.get([&] { return fit_outcome(data, OutcomeKind::Ols); });
        };
        auto w_dm = [&]() -> const BalanceWeights& {
            return dm.get([&] {
                return fw_balance(data, LinearBall{}, options.lambda, options.psi, options.fw_iterations);
            });
        };
        rec.add("Raw", "att", [&] { return att_weighted(BalanceWeights::uniform(data), data); });
        rec.add("IPW", "att", [&] { return att_weighted(ipw_weights(e(), data, false), data); });
        rec.add("IPWn", "att", [&] { return att_weighted(ipw_weights(e(), data, true), data); });
        rec.add("AIPW", "att", [&] { return att_dr(ipw_weights(e(), data, false), data, f0()); });
        rec.add("AIPWn", "att", [&] { return att_dr(ipw_weights(e(), data, true), data, f0()); });
        rec.add("OLS", "att", [&] { return att_regression(data, f0()); });
        rec.add("DM", "att", [&] { return att_weighted(w_dm(), data); });
        rec.add("DM-DR", "att", [&] { return att_dr(w_dm(), data, f0()); });
        return rec.take();
    };
}

std::string dm_label(double lambda) {
    std::ostringstream os;
    os << "DM" << lambda;
    return os.str();
}

std::vector<std::string> deep_methods(const DeepOptions& options) {
    std::vector<std::string> names = {"Raw", "IPW", "IPWn", "Regn", "AIPW", "AIPWn"};
    for (double l : options.lambdas) names.push_back(dm_label(l));
    for (double l : options.lambdas) names.push_back(dm_label(l) + "-DR");
    if (options.methods.empty()) return names;
    std::vector<std::string> out;
    for (const auto& n : names)
        if (wanted(options.methods, n)) out.push_back(n);
    return out;
}

Pipeline deep_pipeline(const DeepOptions& options) {
    return [options](const Simulation& sim, RngStream& rng) {
        const Dataset& data = sim.data;
        const auto& m = options.methods;
        const std::uint64_t base = rng.next_u64();

        NeuralFitConfig nets = options.nets;
        if (nets.architecture.layers.empty()) nets.architecture = default_net(data.dim());
        nets.seed = base;

        Recorder rec(m);
        Lazy<PropensityModel> prop;
        Lazy<OutcomeModel> outcome;
        auto e = [&]() -> const PropensityModel& {
            return prop.get([&] {
                NeuralFitConfig c = nets;
                c.stream = 1;
                return fit_propensity(data, PropensityKind::Neural, c);
            });
        };
        auto f0 = [&]() -> const OutcomeModel& {
            return outcome.get([&] {
                NeuralFitConfig c = nets;
                c.stream = 2;
                return fit_outcome(data, OutcomeKind::Neural, c);
            });
        };
        std::vector<Lazy<BalanceWeights>> dm(options.lambdas.size());
        auto w_dm = [&](std::size_t k) -> const BalanceWeights& {
            return dm[k].get([&] {
                GameConfig g = options.game;
                g.lambda = options.lambdas[k];
                g.seed = base + 101 + k;
                if (g.discriminator.layers.empty()) g.discriminator = default_net(data.dim());
                if (g.weight_net.layers.empty()) g.weight_net = default_net(data.dim());
                return deepmatch_balance(data, g).first;
            });
        };

        rec.add("Raw", "att", [&] { return att_weighted(BalanceWeights::uniform(data), data); });
        rec.add("IPW", "att", [&] { return att_weighted(ipw_weights(e(), data, false), data); });
        rec.add("IPWn", "att", [&] { return att_weighted(ipw_weights(e(), data, true), data); });
        rec.add("Regn", "att", [&] { return att_regression(data, f0()); });
        rec.add("AIPW", "att", [&] { return att_dr(ipw_weights(e(), data, false), data, f0()); });
        rec.add("AIPWn", "att", [&] { return att_dr(ipw_weights(e(), data, true), data, f0()); });
        for (std::size_t k = 0; k < options.lambdas.size(); ++k)
            rec.add(dm_label(options.lambdas[k]), "att", [&] { return att_weighted(w_dm(k), data); });
        for (std::size_t k = 0; k < options.lambdas.size(); ++k)
            rec.add(dm_label(options.lambdas[k]) + "-DR", "att",
                    [&] { return att_dr(w_dm(k), data, f0()); });

        if (options.catt && sim.xh.cols() > 0) {
            const DenseMatrix& xh = sim.xh;
            auto slope = [](const CattModel& c) { return c.slopes[0]; };
            rec.add("Raw", "catt", [&] { return slope(catt_wls(BalanceWeights::uniform(data), data, xh)); });
            rec.add("IPW", "catt", [&] { return slope(catt_wls(ipw_weights(e(), data, false), data, xh)); });
            rec.add("IPWn", "catt", [&] { return slope(catt_wls(ipw_weights(e(), data, true), data, xh)); });
            rec.add("Regn", "catt", [&] { return slope(catt_regression(data, f0(), xh)); });
            for (std::size_t k = 0; k < options.lambdas.size(); ++k)
                rec.add(dm_label(options.lambdas[k]), "catt",
                        [&] { return slope(catt_wls(w_dm(k), data, xh)); });
        }
        return rec.take();
    };
}

DeepOptions fc_options() {
    DeepOptions o;
    o.nets.architecture = default_net(6);
    o.game.discriminator = default_net(6);
    o.game.weight_net = default_net(6);
    return o;
}

DeepOptions conv_options(std::size_t height, std::size_t width, std::size_t c1, std::size_t c2,
                         std::size_t dense) {
    DeepOptions o;
    const Architecture cnn = Architecture::cnn(height, width, c1, c2, 5, dense, Activation::Identity);
    o.nets.architecture = cnn;
    o.game.discriminator = cnn;
    o.game.weight_net = cnn;
    return o;
}

}  // namespace deepmatch
