#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deepmatch/simulation/replicate.hpp"
#include "json.hpp"

namespace deepmatch::cli {

inline constexpr int kSchemaVersion = 1;

/// A plot-data series, written as a two-column text file.
struct Series {
    std::string name;
    std::string x_label = "x";
    std::string y_label = "y";
    std::vector<double> x;
    std::vector<double> y;
};

struct ReportDocument {
    int schema_version = kSchemaVersion;
    std::string kind;  // "experiment" | "distance"
    nlohmann::json config = nlohmann::json::object();
    std::vector<ReplicationReport> reports;
    std::vector<Series> series;
};

/// Non-finite numbers are stored as null and read back as NaN.
nlohmann::json to_json(const ReportDocument& doc);
/// Throws FormatError on a missing field or a schema version mismatch.
ReportDocument document_from_json(const nlohmann::json& j);

void write_document(const std::filesystem::path& path, const ReportDocument& doc);
ReportDocument read_document(const std::filesystem::path& path);

/// One `<name>.tsv` per series in `dir` ('/' in names becomes '_'): a
/// `# x y` comment line, then one "x<TAB>y" line per point. Returns the
/// written paths.
std::vector<std::filesystem::path> write_series(const std::filesystem::path& dir,
                                                const std::vector<Series>& series);

}  // namespace deepmatch::cli
