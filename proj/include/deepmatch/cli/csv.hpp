#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "deepmatch/balancing/weights.hpp"
#include "deepmatch/distances/weighted_sample.hpp"
#include "deepmatch/estimators/dataset.hpp"

namespace deepmatch::cli {

/// Dataset CSV: header `t,y,x1,...,xd`; t is 0 or 1; y is either present on
/// every row or empty on every row. Errors are FormatError naming the line.
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const Dataset& data);

/// Weighted point CSV for the distance command: header `w,x1,...,xd`.
WeightedSample read_sample(std::istream& in, const std::string& source = "<stream>");
WeightedSample read_sample(const std::filesystem::path& path);
void write_sample(std::ostream& out, const WeightedSample& sample);

/// Weights CSV: header `row,weight`, one line per dataset row in order,
/// 0-based rows, 17 significant digits.
std::vector<double> read_weights(std::istream& in, const std::string& source = "<stream>");
std::vector<double> read_weights(const std::filesystem::path& path);
void write_weights(std::ostream& out, std::span<const double> weights);

/// Per-row weights: treated rows 1, controls their balancing weight.
std::vector<double> full_row_weights(const BalanceWeights& w, const Dataset& data);

/// Control weights out of a per-row vector. Tagged TreatedCount when they
/// sum to n1 (relative 1e-9), Unnormalized otherwise. Treated rows must
/// carry weight 1.
BalanceWeights control_weights(std::span<const double> rows, const Dataset& data,
                               const std::string& source = "weights");

/// Shortest decimal with 17 significant digits.
std::string format_real(double v);

}  // namespace deepmatch::cli
