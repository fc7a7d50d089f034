#include "deepmatch/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "deepmatch/balancing/deepmatch.hpp"
#include "deepmatch/balancing/frank_wolfe.hpp"
#include "deepmatch/balancing/objective.hpp"
#include "deepmatch/cli/csv.hpp"
#include "deepmatch/cli/experiment.hpp"
#include "deepmatch/cli/report.hpp"
#include "deepmatch/cli/verify.hpp"
#include "deepmatch/distances/distance.hpp"
#include "deepmatch/estimators/estimators.hpp"
#include "deepmatch/error.hpp"

namespace deepmatch::cli {

namespace {

struct BalanceArgs {
    std::string input, output, config, method = "fw", cls = "linear";
    double lambda = 1.0, psi = 0.0;
    int iterations = 200;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct EstimateArgs {
    std::string input, weights, catt;
    bool dr = false, regression = false;
};

struct DistanceArgs {
    std::string plus, minus, family = "linear", sweep;
    double psi = 1.0, bandwidth = 1.0, sweep_min = 1e-3, sweep_max = 1e3;
    int sweep_points = 25;
    std::uint64_t seed = 0;
};

struct ExperimentArgs {
    std::string config, output, series_dir;
    unsigned threads = 0;
};

struct VerifyArgs {
    bool corrupt_gradient = false;
    std::uint64_t seed = VerifyOptions{}.seed;
};

FunctionClass exact_class(const std::string& name) {
    if (name == "linear") return LinearBall{};
    if (name == "slope") return SignSlope{};
    throw PreconditionError("--class must be linear or slope");
}

unsigned resolve_threads(unsigned t) {
    return t ? t : std::max(1u, std::thread::hardware_concurrency());
}

int cmd_balance(const BalanceArgs& a, bool lambda_set, bool psi_set, std::ostream& out) {
    const Dataset data = read_dataset(a.input);
    data.require_both_arms();
    const FunctionClass cls = exact_class(a.cls);
    if (a.cls == "slope" && data.dim() != 1) throw PreconditionError("--class slope needs one covariate");

    std::optional<BalanceWeights> w;
    double lambda = a.lambda, psi = a.psi;
    if (a.method == "fw") {
        if (!a.config.empty()) throw PreconditionError("--config applies to --method deepmatch");
        w = fw_balance(data, cls, lambda, psi, a.iterations);
    } else if (a.method == "deepmatch") {
        GameConfig g;
        g.discriminator = default_net(data.dim());
        g.weight_net = g.discriminator;
        if (!a.config.empty()) {
            std::ifstream in(a.config);
            if (!in) throw FormatError("cannot open " + a.config);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(a.config + ": " + e.what());
            }
            parse_game_config(j, g);
        }
        if (lambda_set) g.lambda = lambda;
        if (psi_set) g.psi = psi;
        lambda = g.lambda;
        psi = g.psi;
        g.seed = a.seed;
        g.threads = resolve_threads(a.threads);
        g.validate(data.dim());
        w = deepmatch_balance(data, g).first;
    } else {
        throw PreconditionError("--method must be fw or deepmatch");
    }

    std::ofstream file(a.output);
    if (!file) throw FormatError("cannot write " + a.output);
    write_weights(file, full_row_weights(*w, data));
    const double obj = objective_eval(*w, data, cls, psi, lambda);
    if (!std::isfinite(obj)) throw NumericError("balancing objective is not finite");
    out << "objective " << format_real(obj) << '\n';
    return kExitOk;
}

std::vector<std::size_t> parse_columns(const std::string& list, std::size_t dim) {
    std::vector<std::size_t> cols;
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.size() < 2 || tok[0] != 'x') throw PreconditionError("--catt expects columns like x1,x3");
        std::size_t k = 0;
        try {
            std::size_t used = 0;
            k = std::stoul(tok.substr(1), &used);
            if (used != tok.size() - 1) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw PreconditionError("--catt: bad column '" + tok + "'");
        }
        if (k < 1 || k > dim) throw PreconditionError("--catt: column '" + tok + "' out of range");
        cols.push_back(k - 1);
    }
    if (cols.empty()) throw PreconditionError("--catt: empty column list");
    return cols;
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
    const Dataset data = read_dataset(a.input);
    data.require_both_arms();
    data.require_outcomes();
    BalanceWeights w = BalanceWeights::uniform(data);
    if (!a.weights.empty()) {
        const auto rows = read_weights(a.weights);
        if (rows.size() != data.size())
            throw DimensionError(a.weights + ": " + std::to_string(rows.size()) + " weights for " +
                                 std::to_string(data.size()) + " rows");
        w = control_weights(rows, data, a.weights);
    }
    out << "att " << format_real(att_weighted(w, data)) << '\n';
    if (a.dr || a.regression) {
        const OutcomeModel f0 = fit_outcome(data, OutcomeKind::Ols);
        if (a.dr) out << "att_dr " << format_real(att_dr(w, data, f0)) << '\n';
        if (a.regression) out << "att_regression " << format_real(att_regression(data, f0)) << '\n';
    }
    if (!a.catt.empty()) {
        const auto cols = parse_columns(a.catt, data.dim());
        DenseMatrix xh(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            xh.col(static_cast<Eigen::Index>(j)) = data.x().col(static_cast<Eigen::Index>(cols[j]));
        const CattModel m = catt_wls(w, data, xh);
        out << "catt_intercept " << format_real(m.intercept) << '\n';
        for (std::size_t j = 0; j < cols.size(); ++j)
            out << "catt_x" << cols[j] + 1 << ' ' << format_real(m.slopes[static_cast<Eigen::Index>(j)]) << '\n';
    }
    return kExitOk;
}

FunctionClass distance_class(const DistanceArgs& a, std::size_t dim) {
    if (a.family == "linear" || a.family == "slope") return exact_class(a.family);
    if (a.family == "rbf") {
        if (!(a.bandwidth > 0.0)) throw PreconditionError("--bandwidth must be positive");
        return KernelSpec{KernelSpec::Kind::Rbf, a.bandwidth};
    }
    if (a.family == "linear-kernel") return KernelSpec{KernelSpec::Kind::Linear, 1.0};
    if (a.family == "neural") {
        NeuralClass c;
        c.architecture = default_net(dim);
        c.training.seed = a.seed;
        return c;
    }
    throw PreconditionError("--family must be linear, slope, rbf, linear-kernel or neural");
}

int cmd_distance(const DistanceArgs& a, std::ostream& out) {
    const WeightedSample plus = read_sample(a.plus);
    const WeightedSample minus = read_sample(a.minus);
    if (plus.dim() != minus.dim()) throw DimensionError("samples have different dimensions");
    const FunctionClass cls = distance_class(a, plus.dim());
    const bool has_ipm = !std::holds_alternative<NeuralClass>(cls);
    const bool has_dd = !std::holds_alternative<KernelSpec>(cls);
    if (!(a.psi >= 0.0)) throw PreconditionError("--psi must be >= 0");

    if (has_ipm) out << "ipm " << format_real(ipm(cls, plus, minus)) << '\n';
    if (has_dd) {
        const DDResult r = dd(cls, plus, minus, a.psi);
        out << "dd " << format_real(r.value) << '\n';
        out << "scaled_dd " << format_real(2.0 * std::sqrt(2.0 * a.psi) * r.value) << '\n';
        if (!r.converged()) out << "status " << status_name(r.status) << '\n';
    }
    if (!a.sweep.empty()) {
        if (!has_dd) throw PreconditionError("--sweep needs a family with a discriminative distance");
        if (a.sweep_points < 2 || !(a.sweep_min > 0.0) || !(a.sweep_max > a.sweep_min))
            throw PreconditionError("sweep grid needs 0 < min < max and at least 2 points");
        std::ofstream file(a.sweep);
        if (!file) throw FormatError("cannot write " + a.sweep);
        file << "# psi scaled_dd\n";
        const double lo = std::log(a.sweep_min), hi = std::log(a.sweep_max);
        for (int k = 0; k < a.sweep_points; ++k) {
            const double psi = std::exp(lo + (hi - lo) * k / (a.sweep_points - 1));
            const DDResult r = dd(cls, plus, minus, psi);
            file << format_real(psi) << '\t' << format_real(2.0 * std::sqrt(2.0 * psi) * r.value) << '\n';
        }
    }
    return kExitOk;
}

int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
    ExperimentConfig c = read_experiment_config(a.config);
    if (a.threads) c.threads = a.threads;
    if (!a.output.empty()) c.output = a.output;
    if (!a.series_dir.empty()) c.series_dir = a.series_dir;
    const ReportDocument doc = run_experiment(c, [&](const std::string& line) { err << line << '\n'; });
    write_document(c.output, doc);
    if (!c.series_dir.empty()) write_series(c.series_dir, doc.series);
    for (const auto& r : doc.reports) {
        out << r.dgp << " n=" << r.n << " reps=" << r.reps << " truth=" << format_real(r.truth)
            << " failed_replications=" << r.failed_replications << '\n';
        out << "method\ttarget\tbias\tse\trmse\tfailures\n";
        for (const auto& row : r.rows)
            out << row.method << '\t' << row.target << '\t' << format_real(row.bias) << '\t'
                << format_real(row.se) << '\t' << format_real(row.rmse) << '\t' << row.failures << '\n';
    }
    out << "report " << c.output << '\n';
    return kExitOk;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    VerifyOptions o;
    o.seed = a.seed;
    o.corrupt_gradient = a.corrupt_gradient;
    bool ok = true;
    for (const auto& s : run_verify(o)) {
        ok = ok && s.passed;
        out << (s.passed ? "PASS " : "FAIL ") << s.name << " margin=" << format_real(s.margin)
            << " checks=" << s.checks;
        if (!s.detail.empty()) out << "  " << s.detail;
        out << '\n';
    }
    return ok ? kExitOk : kExitSuite;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adversarial balancing for causal inference"};
    app.require_subcommand(1);

    BalanceArgs ba;
    auto* balance = app.add_subcommand("balance", "Balancing weights for a dataset CSV");
    balance->add_option("--input", ba.input, "dataset CSV (t,y,x1..xd)")->required();
    balance->add_option("--output", ba.output, "weights CSV (row,weight)")->required();
    balance->add_option("--method", ba.method, "fw | deepmatch")->capture_default_str();
    balance->add_option("--config", ba.config, "JSON game settings for deepmatch");
    auto* lambda_opt = balance->add_option("--lambda", ba.lambda, "weight penalty")->capture_default_str();
    auto* psi_opt = balance->add_option("--psi", ba.psi, "discriminator penalty")->capture_default_str();
    balance->add_option("--iterations", ba.iterations, "conditional-gradient steps")->capture_default_str();
    balance->add_option("--class", ba.cls, "linear | slope (fw class and reported objective)")
        ->capture_default_str();
    balance->add_option("--seed", ba.seed)->capture_default_str();
    balance->add_option("--threads", ba.threads, "0: machine parallelism");

    EstimateArgs ea;
    auto* estimate = app.add_subcommand("estimate", "ATT and CATT from a dataset and weights");
    estimate->add_option("--input", ea.input, "dataset CSV with outcomes")->required();
    estimate->add_option("--weights", ea.weights, "weights CSV; default uniform control weights");
    estimate->add_flag("--dr", ea.dr, "doubly robust with an OLS control-outcome model");
    estimate->add_flag("--regression", ea.regression, "OLS outcome-regression estimate");
    estimate->add_option("--catt", ea.catt, "effect covariates, e.g. x1,x2");

    DistanceArgs da;
    auto* distance = app.add_subcommand("distance", "IPM and discriminative distance between samples");
    distance->add_option("--plus", da.plus, "sample CSV (w,x1..xd)")->required();
    distance->add_option("--minus", da.minus, "sample CSV (w,x1..xd)")->required();
    distance->add_option("--family", da.family, "linear | slope | rbf | linear-kernel | neural")
        ->capture_default_str();
    distance->add_option("--psi", da.psi)->capture_default_str();
    distance->add_option("--bandwidth", da.bandwidth, "RBF bandwidth")->capture_default_str();
    distance->add_option("--sweep", da.sweep, "write psi vs 2 sqrt(2 psi) DD to this file");
    distance->add_option("--sweep-min", da.sweep_min)->capture_default_str();
    distance->add_option("--sweep-max", da.sweep_max)->capture_default_str();
    distance->add_option("--sweep-points", da.sweep_points)->capture_default_str();
    distance->add_option("--seed", da.seed, "neural family training seed")->capture_default_str();

    ExperimentArgs xa;
    auto* experiment = app.add_subcommand("experiment", "Replicated simulation study from a JSON config");
    experiment->add_option("--config", xa.config)->required();
    experiment->add_option("--threads", xa.threads, "0: machine parallelism capped by reps");
    experiment->add_option("--output", xa.output, "report path (overrides the config)");
    experiment->add_option("--series-dir", xa.series_dir, "plot-data directory (overrides the config)");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Property suites over the distance and balancing code");
    verify->add_flag("--corrupt-gradient", va.corrupt_gradient, "negative control: must fail");
    verify->add_option("--seed", va.seed)->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (balance->parsed()) return cmd_balance(ba, lambda_opt->count() > 0, psi_opt->count() > 0, out);
        if (estimate->parsed()) return cmd_estimate(ea, out);
        if (distance->parsed()) return cmd_distance(da, out);
        if (experiment->parsed()) return cmd_experiment(xa, out, err);
        if (verify->parsed()) return cmd_verify(va, out);
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace deepmatch::cli
