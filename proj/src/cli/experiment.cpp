#include "deepmatch/cli/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "deepmatch/error.hpp"

namespace deepmatch::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw FormatError(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw FormatError(where + ": unknown key '" + k + "'");
}

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError(where + "." + key + " has the wrong type");
    }
}

void parse_nets(const json& j, NeuralFitConfig& c) {
    check_keys(j, "nets", {"epochs", "batch_size", "learning_rate"});
    take(j, "epochs", c.epochs, "nets");
    take(j, "batch_size", c.batch_size, "nets");
    take(j, "learning_rate", c.learning_rate, "nets");
    if (c.epochs <= 0 || c.batch_size == 0 || !(c.learning_rate > 0.0))
        throw PreconditionError("nets: epochs, batch_size and learning_rate must be positive");
}

fs::path first_existing(const fs::path& dir, const std::vector<std::string>& names) {
    for (const auto& n : names)
        if (fs::exists(dir / n)) return dir / n;
    return {};
}

}  // namespace

void parse_game_config(const json& j, GameConfig& g) {
    check_keys(j, "game", {"psi", "epochs_stage1", "epochs_stage2", "batch_size", "runs", "eta",
                           "grid_size", "learning_rate", "probe_epochs", "phi_grid"});
    take(j, "psi", g.psi, "game");
    take(j, "epochs_stage1", g.epochs_stage1, "game");
    take(j, "epochs_stage2", g.epochs_stage2, "game");
    take(j, "batch_size", g.batch_size, "game");
    take(j, "runs", g.runs, "game");
    take(j, "eta", g.eta, "game");
    take(j, "grid_size", g.grid_size, "game");
    take(j, "learning_rate", g.learning_rate, "game");
    take(j, "probe_epochs", g.probe_epochs, "game");
    if (j.contains("phi_grid")) {
        std::vector<double> grid;
        take(j, "phi_grid", grid, "game");
        g.phi_grid = grid;
    }
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : source.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

ExperimentConfig parse_experiment_config(const json& j) {
    check_keys(j, "config",
               {"spec", "n", "n_values", "reps", "seed", "threads", "methods", "lambda", "psi",
                "fw_iterations", "lambdas", "catt", "game", "nets", "images", "downscale", "conv",
                "treated_fraction", "output", "series_dir"});
    ExperimentConfig c;
    c.source = j;
    take(j, "spec", c.spec, "config");
    if (c.spec != "shallow" && c.spec != "fc" && c.spec != "conv")
        throw FormatError("config.spec must be shallow, fc or conv");
    if (j.contains("n") && j.contains("n_values")) throw FormatError("config: give n or n_values, not both");
    if (j.contains("n")) {
        std::size_t n = 0;
        take(j, "n", n, "config");
        c.n_values = {n};
    }
    take(j, "n_values", c.n_values, "config");
    if (c.n_values.empty()) throw PreconditionError("config.n_values is empty");
    for (std::size_t n : c.n_values)
        if (n < 4) throw PreconditionError("config: n must be at least 4");
    take(j, "reps", c.reps, "config");
    if (c.reps < 2) throw PreconditionError("config.reps must be at least 2");
    take(j, "seed", c.seed, "config");
    take(j, "threads", c.threads, "config");
    take(j, "methods", c.methods, "config");
    take(j, "output", c.output, "config");
    take(j, "series_dir", c.series_dir, "config");

    if (c.spec == "shallow") {
        for (const char* k : {"lambdas", "catt", "game", "nets", "images", "conv", "downscale", "treated_fraction"})
            if (j.contains(k)) throw FormatError(std::string("config.") + k + " does not apply to the shallow design");
        take(j, "lambda", c.shallow.lambda, "config");
        take(j, "psi", c.shallow.psi, "config");
        take(j, "fw_iterations", c.shallow.fw_iterations, "config");
        if (!(c.shallow.lambda >= 0.0) || !(c.shallow.psi >= 0.0) || c.shallow.fw_iterations < 1)
            throw PreconditionError("config: lambda, psi >= 0 and fw_iterations >= 1 required");
        c.shallow.methods = c.methods;
        const auto known = shallow_methods();
        for (const auto& m : c.methods)
            if (std::find(known.begin(), known.end(), m) == known.end())
                throw FormatError("config.methods: unknown method '" + m + "'");
        return c;
    }

    for (const char* k : {"lambda", "psi", "fw_iterations"})
        if (j.contains(k)) throw FormatError(std::string("config.") + k + " applies to the shallow design only");
    if (c.spec == "fc") {
        for (const char* k : {"images", "conv", "downscale", "treated_fraction"})
            if (j.contains(k)) throw FormatError(std::string("config.") + k + " applies to the conv design only");
        c.deep = fc_options();
    }
    if (c.spec == "conv") {
        if (j.contains("images")) {
            const json& im = j.at("images");
            check_keys(im, "images", {"images", "labels", "directory", "synthetic_per_digit"});
            take(im, "images", c.image_source.images, "images");
            take(im, "labels", c.image_source.labels, "images");
            take(im, "directory", c.image_source.directory, "images");
            take(im, "synthetic_per_digit", c.image_source.synthetic_per_digit, "images");
        }
        take(j, "downscale", c.downscale, "config");
        if (c.downscale == 0 || 28 % c.downscale) throw PreconditionError("config.downscale must divide 28");
        if (j.contains("conv")) {
            const json& cv = j.at("conv");
            check_keys(cv, "conv", {"c1", "c2", "dense"});
            take(cv, "c1", c.conv_c1, "conv");
            take(cv, "c2", c.conv_c2, "conv");
            take(cv, "dense", c.conv_dense, "conv");
        }
        take(j, "treated_fraction", c.treated_fraction, "config");
        for (double f : c.treated_fraction)
            if (!(f >= 0.0 && f <= 1.0)) throw PreconditionError("config.treated_fraction entries must lie in [0,1]");
        const std::size_t side = 28 / c.downscale;
        if (side < 9) throw PreconditionError("config.downscale leaves images too small for two 5x5 convolutions");
        c.deep = conv_options(side, side, c.conv_c1, c.conv_c2, c.conv_dense);
    }
    take(j, "lambdas", c.deep.lambdas, "config");
    for (double l : c.deep.lambdas)
        if (!(l >= 0.0)) throw PreconditionError("config.lambdas must be nonnegative");
    take(j, "catt", c.deep.catt, "config");
    if (j.contains("game")) parse_game_config(j.at("game"), c.deep.game);
    if (j.contains("nets")) parse_nets(j.at("nets"), c.deep.nets);
    c.deep.game.validate(c.deep.game.discriminator.input_size());
    c.deep.methods = c.methods;
    DeepOptions all = c.deep;
    all.methods.clear();
    const auto known = deep_methods(all);
    for (const auto& m : c.methods)
        if (std::find(known.begin(), known.end(), m) == known.end())
            throw FormatError("config.methods: unknown method '" + m + "'");
    return c;
}

ExperimentConfig read_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return parse_experiment_config(j);
}

std::shared_ptr<const ImageStore> load_images(const ImageSource& source, std::uint64_t seed) {
    if (!source.images.empty() || !source.labels.empty()) {
        if (source.images.empty() || source.labels.empty())
            throw PreconditionError("images: give both the image and the label file");
        return std::make_shared<ImageStore>(load_idx(source.images, source.labels));
    }
    std::string dir = source.directory;
    if (dir.empty())
        if (const char* env = std::getenv(kMnistEnv)) dir = env;
    if (!dir.empty()) {
        const fs::path img = first_existing(dir, {"train-images-idx3-ubyte", "train-images-idx3-ubyte.gz",
                                                  "train-images.idx3-ubyte"});
        const fs::path lab = first_existing(dir, {"train-labels-idx1-ubyte", "train-labels-idx1-ubyte.gz",
                                                  "train-labels.idx1-ubyte"});
        if (img.empty() || lab.empty()) throw FormatError("no IDX training files found in " + dir);
        return std::make_shared<ImageStore>(load_idx(img, lab));
    }
    if (source.synthetic_per_digit > 0) {
        RngStream rng(seed, 0x1d6e5);
        return std::make_shared<ImageStore>(synthetic_digits(source.synthetic_per_digit, rng));
    }
    throw PreconditionError(std::string("conv design needs images: set images.images/labels, images.directory, ") +
                            kMnistEnv + " or images.synthetic_per_digit");
}

ReportDocument run_experiment(const ExperimentConfig& config,
                              const std::function<void(const std::string&)>& progress) {
    unsigned threads = config.threads;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(config.reps));

    std::shared_ptr<const ImageStore> images;
    if (config.spec == "conv") images = load_images(config.image_source, config.seed);

    Pipeline pipeline;
    if (config.spec == "shallow") {
        pipeline = shallow_pipeline(config.shallow);
    } else {
        DeepOptions o = config.deep;
        o.game.threads = 1;
        pipeline = deep_pipeline(o);
    }

    ReportDocument doc;
    doc.kind = "experiment";
    doc.config = config.source;
    for (std::size_t n : config.n_values) {
        DgpSpec spec;
        if (config.spec == "shallow") {
            spec = ShallowSpec{n};
        } else if (config.spec == "fc") {
            spec = FullyConnectedSpec{n};
        } else {
            ConvolutionalSpec c;
            c.n = n;
            c.images = images;
            c.image_source = config.image_source.images.empty() ? config.image_source.directory
                                                                : config.image_source.images;
            c.downscale = config.downscale;
            c.treated_fraction = config.treated_fraction;
            spec = c;
        }
        doc.reports.push_back(replicate(spec, pipeline, config.reps, config.seed, threads, config.hash()));
        if (progress) {
            std::ostringstream os;
            os << config.spec << " n=" << n << " done (" << config.reps << " replications)";
            progress(os.str());
        }
    }
    if (config.n_values.size() > 1) {
        std::map<std::pair<std::string, std::string>, Series> by_method;
        std::vector<std::pair<std::string, std::string>> order;
        for (const auto& r : doc.reports) {
            for (const auto& row : r.rows) {
                const auto key = std::make_pair(row.method, row.target);
                if (!by_method.count(key)) {
                    order.push_back(key);
                    Series s;
                    s.name = "rmse_vs_n/" + row.target + "/" + row.method;
                    s.x_label = "n";
                    s.y_label = "rmse";
                    by_method[key] = s;
                }
                by_method[key].x.push_back(static_cast<double>(r.n));
                by_method[key].y.push_back(row.rmse);
            }
        }
        for (const auto& k : order) doc.series.push_back(by_method[k]);
    }
    return doc;
}

}  // namespace deepmatch::cli
