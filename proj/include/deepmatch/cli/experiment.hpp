#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deepmatch/cli/report.hpp"
#include "deepmatch/simulation/experiments.hpp"

namespace deepmatch::cli {

/// Environment variable naming a directory with MNIST-style IDX files
/// (train-images-idx3-ubyte and train-labels-idx1-ubyte, optionally .gz).
inline constexpr const char* kMnistEnv = "DEEPMATCH_MNIST_DIR";

struct ImageSource {
    std::string images;       // IDX image file
    std::string labels;       // IDX label file
    std::string directory;    // alternative: directory holding both
    std::size_t synthetic_per_digit = 0;  // > 0: procedural glyphs instead
};

struct ExperimentConfig {
    std::string spec = "shallow";  // shallow | fc | conv
    std::vector<std::size_t> n_values = {300};
    std::size_t reps = 2;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: machine parallelism capped by reps
    std::vector<std::string> methods;

    ShallowOptions shallow;
    DeepOptions deep;

    ImageSource image_source;
    std::size_t downscale = 2;
    std::size_t conv_c1 = 8;
    std::size_t conv_c2 = 16;
    std::size_t conv_dense = 128;
    std::array<double, 10> treated_fraction = {0.1, 0.1, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9, 0.9};

    std::string output = "report.json";
    std::string series_dir;  // empty: no series files

    nlohmann::json source = nlohmann::json::object();  // the parsed document

    /// FNV-1a of the canonical configuration text.
    std::uint64_t hash() const;
};

/// Game fields of a `game` object (psi, epochs_stage1, ...); strict keys.
void parse_game_config(const nlohmann::json& j, GameConfig& game);

/// Strict parse: unknown keys, wrong types and invalid values raise
/// FormatError or PreconditionError before anything runs.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

/// Resolves the image source: explicit files, a directory, the
/// environment variable, then procedural glyphs when configured.
std::shared_ptr<const ImageStore> load_images(const ImageSource& source, std::uint64_t seed);

/// Runs replicate once per n; adds an RMSE-vs-n series per method and
/// target when more than one n is configured. `progress` receives one line
/// per finished n.
ReportDocument run_experiment(const ExperimentConfig& config,
                              const std::function<void(const std::string&)>& progress = {});

}  // namespace deepmatch::cli
