#include "deepmatch/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "deepmatch/error.hpp"

namespace deepmatch::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
    throw FormatError(source + ":" + std::to_string(line) + ": " + msg);
}

double parse_real(const std::string& s, const std::string& source, std::size_t line,
                  const std::string& column) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (s.empty() || ec != std::errc() || ptr != e)
        fail(source, line, "column " + column + ": '" + s + "' is not a number");
    if (!std::isfinite(v)) fail(source, line, "column " + column + ": non-finite value");
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in, const std::string& source) {
    Table t;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (n == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
        if (line.empty()) continue;
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            fail(source, n, "expected " + std::to_string(t.header.size()) + " fields, found " +
                                std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(n);
    }
    if (t.header.empty()) fail(source, 1, "missing header");
    return t;
}

void expect_columns(const Table& t, const std::string& source, std::size_t fixed,
                    const std::vector<std::string>& names) {
    for (std::size_t k = 0; k < fixed; ++k)
        if (t.header.size() <= k || t.header[k] != names[k])
            fail(source, 1, "header column " + std::to_string(k + 1) + " must be '" + names[k] + "'");
    for (std::size_t k = fixed; k < t.header.size(); ++k) {
        const std::string want = "x" + std::to_string(k - fixed + 1);
        if (t.header[k] != want) fail(source, 1, "header column " + std::to_string(k + 1) + " must be '" + want + "'");
    }
}

template <class F>
auto with_file(const std::filesystem::path& path, F&& f) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    return f(in, path.string());
}

}  // namespace

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Dataset read_dataset(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source);
    expect_columns(t, source, 2, {"t", "y"});
    const std::size_t d = t.header.size() - 2;
    if (d == 0) fail(source, 1, "no covariate columns");
    if (t.rows.empty()) fail(source, 2, "no data rows");
    DenseMatrix x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(d));
    std::vector<int> treat(t.rows.size());
    std::vector<double> y(t.rows.size());
    const bool has_y = !t.rows[0][1].empty();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::size_t ln = t.line_numbers[i];
        if (r[0] != "0" && r[0] != "1") fail(source, ln, "column t: '" + r[0] + "' is not 0 or 1");
        treat[i] = r[0] == "1";
        if (r[1].empty() == has_y) fail(source, ln, "column y must be filled on every row or on none");
        if (has_y) y[i] = parse_real(r[1], source, ln, "y");
        for (std::size_t j = 0; j < d; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_real(r[j + 2], source, ln, t.header[j + 2]);
    }
    if (has_y) return Dataset(std::move(x), std::move(treat), std::move(y));
    return Dataset(std::move(x), std::move(treat));
}

Dataset read_dataset(const std::filesystem::path& path) {
    return with_file(path, [](std::istream& in, const std::string& s) { return read_dataset(in, s); });
}

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "t,y";
    for (std::size_t j = 0; j < data.dim(); ++j) out << ",x" << j + 1;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.t(i) << ',';
        if (data.has_outcomes()) out << format_real(data.y(i));
        for (double v : data.row(i)) out << ',' << format_real(v);
        out << '\n';
    }
}

WeightedSample read_sample(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source);
    expect_columns(t, source, 1, {"w"});
    const std::size_t d = t.header.size() - 1;
    if (d == 0) fail(source, 1, "no coordinate columns");
    if (t.rows.empty()) fail(source, 2, "no data rows");
    DenseMatrix x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(d));
    std::vector<double> w(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::size_t ln = t.line_numbers[i];
        w[i] = parse_real(t.rows[i][0], source, ln, "w");
        if (w[i] < 0.0) fail(source, ln, "column w: negative weight");
        for (std::size_t j = 0; j < d; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_real(t.rows[i][j + 1], source, ln, t.header[j + 1]);
    }
    return WeightedSample(std::move(w), std::move(x));
}

WeightedSample read_sample(const std::filesystem::path& path) {
    return with_file(path, [](std::istream& in, const std::string& s) { return read_sample(in, s); });
}

void write_sample(std::ostream& out, const WeightedSample& sample) {
    out << 'w';
    for (std::size_t j = 0; j < sample.dim(); ++j) out << ",x" << j + 1;
    out << '\n';
    for (std::size_t i = 0; i < sample.size(); ++i) {
        out << format_real(sample.weight(i));
        for (double v : sample.point(i)) out << ',' << format_real(v);
        out << '\n';
    }
}

std::vector<double> read_weights(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source);
    if (t.header != std::vector<std::string>{"row", "weight"}) fail(source, 1, "header must be 'row,weight'");
    std::vector<double> w(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::size_t ln = t.line_numbers[i];
        if (t.rows[i][0] != std::to_string(i))
            fail(source, ln, "column row: expected " + std::to_string(i) + ", found '" + t.rows[i][0] + "'");
        w[i] = parse_real(t.rows[i][1], source, ln, "weight");
        if (w[i] < 0.0) fail(source, ln, "column weight: negative weight");
    }
    return w;
}

std::vector<double> read_weights(const std::filesystem::path& path) {
    return with_file(path, [](std::istream& in, const std::string& s) { return read_weights(in, s); });
}

void write_weights(std::ostream& out, std::span<const double> weights) {
    out << "row,weight\n";
    for (std::size_t i = 0; i < weights.size(); ++i) out << i << ',' << format_real(weights[i]) << '\n';
}

std::vector<double> full_row_weights(const BalanceWeights& w, const Dataset& data) {
    return (w.convention() == WeightConvention::UnitSum ? w.to_treated_count() : w).full(data);
}

BalanceWeights control_weights(std::span<const double> rows, const Dataset& data,
                               const std::string& source) {
    if (rows.size() != data.size())
        throw DimensionError(source + ": " + std::to_string(rows.size()) + " weights for " +
                             std::to_string(data.size()) + " dataset rows");
    std::vector<double> c;
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.treated(i)) {
            if (rows[i] != 1.0)
                throw FormatError(source + ":" + std::to_string(i + 2) + ": treated row " +
                                  std::to_string(i) + " must have weight 1");
        } else {
            c.push_back(rows[i]);
            s += rows[i];
        }
    }
    const double n1 = static_cast<double>(data.n_treated());
    const auto conv = std::abs(s - n1) <= 1e-9 * std::max(1.0, n1) ? WeightConvention::TreatedCount
                                                                   : WeightConvention::Unnormalized;
    return BalanceWeights(std::move(c), conv, data.n_treated(), WeightProvenance{"file"});
}

}  // namespace deepmatch::cli
