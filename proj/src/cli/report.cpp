#include "deepmatch/cli/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "deepmatch/cli/csv.hpp"
#include "deepmatch/error.hpp"

namespace deepmatch::cli {

using nlohmann::json;

namespace {

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json reals(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(real(x));
    return a;
}

std::vector<double> reals_from(const json& j) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(real_from(x));
    return v;
}

json row_json(const MethodStats& s) {
    return {{"method", s.method},   {"target", s.target},     {"bias", real(s.bias)},
            {"se", real(s.se)},     {"rmse", real(s.rmse)},   {"count", s.count},
            {"failures", s.failures}, {"errors", reals(s.errors)}, {"messages", s.messages}};
}

MethodStats row_from(const json& j) {
    MethodStats s;
    s.method = j.at("method").get<std::string>();
    s.target = j.at("target").get<std::string>();
    s.bias = real_from(j.at("bias"));
    s.se = real_from(j.at("se"));
    s.rmse = real_from(j.at("rmse"));
    s.count = j.at("count").get<std::size_t>();
    s.failures = j.at("failures").get<std::size_t>();
    s.errors = reals_from(j.at("errors"));
    s.messages = j.at("messages").get<std::vector<std::string>>();
    return s;
}

json report_json(const ReplicationReport& r) {
    json rows = json::array();
    for (const auto& s : r.rows) rows.push_back(row_json(s));
    // The hash is a full 64-bit value; a decimal string keeps it exact.
    return {{"dgp", r.dgp},
            {"seed", std::to_string(r.seed)},
            {"n", r.n},
            {"reps", r.reps},
            {"truth", real(r.truth)},
            {"config_hash", std::to_string(r.config_hash)},
            {"failed_replications", r.failed_replications},
            {"sample_truth", reals(r.sample_truth)},
            {"rows", rows}};
}

ReplicationReport report_from(const json& j) {
    ReplicationReport r;
    r.dgp = j.at("dgp").get<std::string>();
    r.seed = std::stoull(j.at("seed").get<std::string>());
    r.n = j.at("n").get<std::size_t>();
    r.reps = j.at("reps").get<std::size_t>();
    r.truth = real_from(j.at("truth"));
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>());
    r.failed_replications = j.at("failed_replications").get<std::size_t>();
    r.sample_truth = reals_from(j.at("sample_truth"));
    for (const auto& row : j.at("rows")) r.rows.push_back(row_from(row));
    return r;
}

}  // namespace

json to_json(const ReportDocument& doc) {
    json reports = json::array();
    for (const auto& r : doc.reports) reports.push_back(report_json(r));
    json series = json::array();
    for (const auto& s : doc.series)
        series.push_back({{"name", s.name},
                          {"x_label", s.x_label},
                          {"y_label", s.y_label},
                          {"x", reals(s.x)},
                          {"y", reals(s.y)}});
    return {{"schema_version", doc.schema_version},
            {"kind", doc.kind},
            {"config", doc.config},
            {"reports", reports},
            {"series", series}};
}

ReportDocument document_from_json(const json& j) {
    try {
        ReportDocument doc;
        doc.schema_version = j.at("schema_version").get<int>();
        if (doc.schema_version != kSchemaVersion)
            throw FormatError("report schema version " + std::to_string(doc.schema_version) +
                              " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
        doc.kind = j.at("kind").get<std::string>();
        doc.config = j.at("config");
        for (const auto& r : j.at("reports")) doc.reports.push_back(report_from(r));
        for (const auto& s : j.at("series")) {
            Series out;
            out.name = s.at("name").get<std::string>();
            out.x_label = s.at("x_label").get<std::string>();
            out.y_label = s.at("y_label").get<std::string>();
            out.x = reals_from(s.at("x"));
            out.y = reals_from(s.at("y"));
            doc.series.push_back(std::move(out));
        }
        return doc;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
}

void write_document(const std::filesystem::path& path, const ReportDocument& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << to_json(doc).dump(2) << '\n';
}

ReportDocument read_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return document_from_json(j);
}

std::vector<std::filesystem::path> write_series(const std::filesystem::path& dir,
                                                const std::vector<Series>& series) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (const auto& s : series) {
        std::string file = s.name;
        for (char& c : file)
            if (c == '/' || c == ' ') c = '_';
        const auto p = dir / (file + ".tsv");
        std::ofstream out(p);
        if (!out) throw FormatError("cannot write " + p.string());
        out << "# " << s.x_label << ' ' << s.y_label << '\n';
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
            out << format_real(s.x[k]) << '\t' << format_real(s.y[k]) << '\n';
        paths.push_back(p);
    }
    return paths;
}

}  // namespace deepmatch::cli
