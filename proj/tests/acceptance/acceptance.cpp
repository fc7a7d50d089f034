// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance --only 3,7 run a subset
//
// Exit status is 0 when every selected criterion passes.

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "deepmatch/balancing/deepmatch.hpp"
#include "deepmatch/balancing/frank_wolfe.hpp"
#include "deepmatch/balancing/game.hpp"
#include "deepmatch/balancing/objective.hpp"
#include "deepmatch/cli/experiment.hpp"
#include "deepmatch/distances/distance.hpp"
#include "deepmatch/error.hpp"
#include "deepmatch/estimators/estimators.hpp"
#include "deepmatch/simulation/dgp.hpp"
#include "deepmatch/simulation/experiments.hpp"
#include "deepmatch/simulation/idx.hpp"
#include "deepmatch/simulation/replicate.hpp"

using namespace deepmatch;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 2718;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

WeightedSample line_sample(std::vector<double> w, std::vector<double> x) {
    DenseMatrix m(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = x[i];
    return WeightedSample(std::move(w), std::move(m));
}

WeightedSample random_sample(RngStream& rng, std::size_t n, std::size_t d, double total) {
    std::vector<double> w(n);
    double s = 0.0;
    for (double& v : w) s += (v = rng.uniform(0.05, 1.0));
    for (double& v : w) v *= total / s;
    DenseMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-2.0, 2.0);
    return WeightedSample(std::move(w), std::move(x));
}

Dataset random_data(RngStream& rng, std::size_t n1, std::size_t n0, std::size_t d, double shift) {
    DenseMatrix x(static_cast<Eigen::Index>(n1 + n0), static_cast<Eigen::Index>(d));
    std::vector<int> t(n1 + n0, 0);
    for (std::size_t i = 0; i < n1 + n0; ++i) {
        t[i] = i < n1;
        for (std::size_t j = 0; j < d; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rng.uniform(-1.0, 1.0) + (i < n1 ? shift : 0.0);
    }
    return Dataset(std::move(x), std::move(t));
}

// Test-side IPM for the two exact classes: |signed weighted sum| for x -> +-x,
// norm of the signed weighted mean for the linear unit ball (equal totals).
double ipm_oracle(bool slope, const WeightedSample& p, const WeightedSample& m) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dim()));
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.dim(); ++j) s[static_cast<Eigen::Index>(j)] += p.weight(i) * p.point(i)[j];
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j) s[static_cast<Eigen::Index>(j)] -= m.weight(i) * m.point(i)[j];
    return slope ? std::abs(s[0]) : s.norm();
}

double max_norm(const WeightedSample& p, const WeightedSample& m) {
    double best = 0.0;
    for (const auto* s : {&p, &m})
        for (std::size_t i = 0; i < s->size(); ++i) {
            double r = 0.0;
            for (double v : s->point(i)) r += v * v;
            best = std::max(best, std::sqrt(r));
        }
    return best;
}

// 1. Closed forms of the two worked examples.
Verdict closed_forms() {
    const double ln2 = std::numbers::ln2;
    const double want12 = std::sqrt(2.0 * ln2);
    const double want13 = std::sqrt(std::log(27.0 / 16.0) / 2.0);
    const auto s1 = line_sample({1.0}, {1.0});
    const auto s2 = line_sample({1.0}, {-1.0});
    const auto s3 = line_sample({0.5, 0.5}, {1.0, -1.0});
    double worst = std::abs(dd(SignSlope{}, s1, s2, 0.0).value - want12);
    worst = std::max(worst, std::abs(dd(SignSlope{}, s1, s3, 0.0).value - want13));
    double ipm_worst = 0.0;
    for (double delta : {1e-3, 1e-2, 0.1, 1.0}) {
        const auto p = line_sample({1.0}, {delta / 2});
        const auto m = line_sample({1.0}, {-delta / 2});
        ipm_worst = std::max(ipm_worst, std::abs(ipm(SignSlope{}, p, m) - delta));
        worst = std::max(worst, std::abs(dd(SignSlope{}, p, m, 0.0).value - want12));
    }
    return {worst <= 1e-6 && ipm_worst <= 1e-15,
            "max |DD - closed form| " + fmt(worst) + ", max |IPM - delta| " + fmt(ipm_worst)};
}

// 2. 2 sqrt(2 psi) DD <= IPM <= max(2 M sqrt(wbar), 4 sqrt(psi)) DD.
Verdict sandwich() {
    RngStream rng(kSeed, 2);
    int violations = 0;
    double worst_lower = INFINITY, worst_upper = INFINITY;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t d = 1 + rep % 3;
        const bool slope = d == 1 && (rep / 3) % 2 == 0;
        const double total = rng.uniform(0.2, 2.0);
        const auto p = random_sample(rng, 1 + rng.uniform_index(5), d, total);
        const auto m = random_sample(rng, 1 + rng.uniform_index(5), d, slope ? rng.uniform(0.2, 2.0) : total);
        const double psi = std::array{0.1, 1.0, 10.0}[rep % 3];
        const FunctionClass cls = slope ? FunctionClass{SignSlope{}} : FunctionClass{LinearBall{}};
        const double dist = dd(cls, p, m, psi).value;
        const double ip = ipm_oracle(slope, p, m);
        const double wbar = p.total_weight() + m.total_weight();
        const double big_m = max_norm(p, m);
        const double lower = 2.0 * std::sqrt(2.0 * psi) * dist;
        const double upper = std::max(2.0 * big_m * std::sqrt(wbar), 4.0 * std::sqrt(psi)) * dist;
        worst_lower = std::min(worst_lower, ip - lower);
        worst_upper = std::min(worst_upper, upper - ip);
        if (ip < lower - 1e-6 || ip > upper + 1e-6) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations in 1000; min lower slack " +
                                 fmt(worst_lower) + ", min upper slack " + fmt(worst_upper)};
}

// 3. Scaled DD rises to the IPM as psi grows.
Verdict psi_limit() {
    RngStream rng(kSeed, 3);
    int monotone_breaks = 0;
    double worst_gap = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const bool slope = rep % 2 == 0;
        const std::size_t d = slope ? 1 : 2;
        const auto p = random_sample(rng, 2 + rng.uniform_index(4), d, 1.0);
        const auto m = random_sample(rng, 2 + rng.uniform_index(4), d, 1.0);
        const FunctionClass cls = slope ? FunctionClass{SignSlope{}} : FunctionClass{LinearBall{}};
        const double big_m = max_norm(p, m);
        const double wbar = p.total_weight() + m.total_weight();
        const double base = wbar * big_m * big_m;
        double prev = 0.0;
        for (int k = 0; k <= 21; ++k) {
            const double psi = base * std::pow(10.0, -3.0 + k / 3.0);  // up to 1e4 * wbar M^2
            const double scaled = 2.0 * std::sqrt(2.0 * psi) * dd(cls, p, m, psi).value;
            if (scaled < prev - 1e-8) ++monotone_breaks;
            prev = scaled;
        }
        const double ip = ipm_oracle(slope, p, m);
        worst_gap = std::max(worst_gap, std::abs(ip - prev) / ip);
    }
    return {monotone_breaks == 0 && worst_gap <= 0.01,
            std::to_string(monotone_breaks) + " monotonicity breaks; worst relative gap to IPM at 1e4 wbar M^2 " +
                fmt(worst_gap)};
}

// 4. Primal value against the dual minimum.
Verdict duality() {
    RngStream rng(kSeed, 4);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const double psi = std::array{0.5, 1.0, 5.0}[rep % 3];
        const bool slope = rep % 2 == 0;
        const std::size_t d = slope ? 1 : 1 + rep % 3;
        const auto p = random_sample(rng, 2 + rng.uniform_index(3), d, 1.0);
        const auto m = random_sample(rng, 2 + rng.uniform_index(3), d, slope ? rng.uniform(0.4, 1.5) : 1.0);
        const FunctionClass cls = slope ? FunctionClass{SignSlope{}} : FunctionClass{LinearBall{}};
        worst = std::max(worst, std::abs(dd(cls, p, m, psi).squared_value - dd_dual(cls, p, m, psi).value));
    }
    return {worst <= 1e-4, "max |DD^2 - dual| " + fmt(worst)};
}

std::vector<double> random_simplex(RngStream& rng, std::size_t n) {
    std::vector<double> u(n);
    double s = 0.0;
    for (double& v : u) s += (v = -std::log(1.0 - rng.uniform()));
    for (double& v : u) v /= s;
    return u;
}

// 5. Midpoint convexity of the balancing objective.
Verdict convexity() {
    RngStream rng(kSeed, 5);
    int violations = 0;
    double worst = INFINITY;
    for (int rep = 0; rep < 200; ++rep) {
        const bool slope = rep % 4 == 0;
        const Dataset d = random_data(rng, 3 + rep % 5, 3 + rep % 6, slope ? 1 : 1 + rep % 3, rng.uniform(0.0, 0.8));
        const double psi = std::array{0.0, 0.1, 1.0}[rep % 3];
        const double lambda = std::array{0.0, 0.5, 2.0}[(rep / 3) % 3];
        const FunctionClass cls = slope ? FunctionClass{SignSlope{}} : FunctionClass{LinearBall{}};
        const auto a = random_simplex(rng, d.n_control());
        const auto b = random_simplex(rng, d.n_control());
        std::vector<double> mid(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
        const double slack = 0.5 * (objective_unit_sum(a, d, cls, psi, lambda) + objective_unit_sum(b, d, cls, psi, lambda)) -
                             objective_unit_sum(mid, d, cls, psi, lambda);
        worst = std::min(worst, slack);
        if (slack < -1e-8) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations in 200; min slack " + fmt(worst)};
}

// Central differences with a relative error floored at 1e-2.
double fd_error(const std::function<double(const std::vector<double>&)>& loss, std::vector<double> theta,
                const std::vector<double>& analytic) {
    double worst = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(theta[k]));
        const double keep = theta[k];
        theta[k] = keep + h;
        const double up = loss(theta);
        theta[k] = keep - h;
        const double down = loss(theta);
        theta[k] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-2});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
    }
    return worst;
}

// 6. Game and stage-2 gradients against finite differences.
Verdict gradients() {
    RngStream rng(kSeed, 6);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t dim = 1 + rep % 4;
        const Dataset data = random_data(rng, 3 + rep % 5, 4 + rep % 4, dim, 0.3);
        const std::vector<std::size_t> hidden_f = rep % 2 ? std::vector<std::size_t>{3, 2} : std::vector<std::size_t>{2, 2, 2, 2};
        Network f(Architecture::mlp(dim, hidden_f, Activation::Identity));
        Network g(Architecture::mlp(dim, {static_cast<std::size_t>(2 + rep % 3)}, Activation::Identity));
        f.initialize(rng);
        g.initialize(rng);
        for (auto* net : {&f, &g})
            for (std::size_t l = 0; l < net->layers().size(); ++l)
                for (double& b : net->bias(l)) b = rng.uniform(-0.3, 0.3);
        const GameParams p{rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(-0.5, 1.0), data.n_treated()};
        std::vector<std::size_t> batch;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (rep % 3 || rng.bernoulli(0.7)) batch.push_back(i);
        if (batch.empty()) batch.push_back(0);

        GameWorkspace ws;
        std::vector<double> gf(f.num_params()), gg(g.num_params());
        game_batch(f, g, data, batch, p, gf, gg, ws);
        auto lf = [&](const std::vector<double>& th) {
            Network probe = f;
            std::copy(th.begin(), th.end(), probe.params().begin());
            GameWorkspace w2;
            return game_batch(probe, g, data, batch, p, {}, {}, w2);
        };
        auto lg = [&](const std::vector<double>& th) {
            Network probe = g;
            std::copy(th.begin(), th.end(), probe.params().begin());
            GameWorkspace w2;
            return game_batch(f, probe, data, batch, p, {}, {}, w2);
        };
        std::vector<double> full(data.size());
        for (double& w : full) w = rng.uniform(0.1, 2.0);
        ForwardCache cache;
        std::vector<double> g2(f.num_params());
        stage2_batch(f, data, full, batch, p.psi, data.n_treated(), g2, cache);
        auto l2 = [&](const std::vector<double>& th) {
            Network probe = f;
            std::copy(th.begin(), th.end(), probe.params().begin());
            ForwardCache c2;
            return stage2_batch(probe, data, full, batch, p.psi, data.n_treated(), {}, c2);
        };
        const std::vector<double> tf(f.params().begin(), f.params().end());
        const std::vector<double> tg(g.params().begin(), g.params().end());
        worst = std::max({worst, fd_error(lf, tf, gf), fd_error(lg, tg, gg), fd_error(l2, tf, g2)});
    }
    return {worst < 1e-5, "max relative error " + fmt(worst)};
}

// 7. Conditional gradient against a simplex grid with three controls.
Verdict grid_optimality() {
    RngStream rng(kSeed, 7);
    double worst = 0.0;
    constexpr int kSteps = 200;
    for (int rep = 0; rep < 20; ++rep) {
        const bool slope = rep % 4 == 0;
        const Dataset d = random_data(rng, 2 + rep % 4, 3, slope ? 1 : 1 + rep % 2, rng.uniform(0.0, 0.8));
        const double psi = std::array{0.0, 0.5, 1.0}[rep % 3];
        const double lambda = std::array{0.0, 0.5, 1.0}[(rep / 3) % 3];
        const FunctionClass cls = slope ? FunctionClass{SignSlope{}} : FunctionClass{LinearBall{}};
        double best = INFINITY;
        for (int a = 0; a <= kSteps; ++a)
            for (int b = 0; a + b <= kSteps; ++b) {
                const std::vector<double> u{double(a) / kSteps, double(b) / kSteps, double(kSteps - a - b) / kSteps};
                best = std::min(best, objective_unit_sum(u, d, cls, psi, lambda));
            }
        const BalanceWeights w = fw_balance(d, cls, lambda, psi, 5000);
        worst = std::max(worst, std::abs(objective_eval(w, d, cls, psi, lambda) - best));
    }
    return {worst <= 1e-3, "max |objective - grid minimum| " + fmt(worst)};
}

std::string row_summary(const ReplicationReport& r, const std::vector<std::string>& methods,
                        const std::string& target = "att") {
    std::string s;
    for (const auto& m : methods) {
        if (!r.has(m, target)) continue;
        const auto& row = r.row(m, target);
        s += " " + m + "(bias " + fmt(row.bias, 3) + ", rmse " + fmt(row.rmse, 3);
        if (row.failures) s += ", " + std::to_string(row.failures) + " failed";
        s += ")";
    }
    return s;
}

// 8. Shallow design RMSE ordering.
Verdict shallow_ordering() {
    ShallowOptions o;
    o.lambda = 1.0;
    o.psi = 0.0;
    const ReplicationReport r = replicate(ShallowSpec{300}, shallow_pipeline(o), 500, kSeed + 8, threads());
    const double dm = r.row("DM").rmse, ols = r.row("OLS").rmse;
    const double ipw = std::min({r.row("IPW").rmse, r.row("IPWn").rmse, r.row("AIPW").rmse});
    return {dm < ols && ols < ipw,
            "rmse DM " + fmt(dm) + " < OLS " + fmt(ols) + " < min(IPW, IPWn, AIPW) " + fmt(ipw)};
}

// 9. Fully connected design at the published settings.
Verdict fully_connected() {
    const DeepOptions o = fc_options();
    const ReplicationReport r = replicate(FullyConnectedSpec{1000}, deep_pipeline(o), 50, kSeed + 9, threads());
    const double raw = r.row("Raw").bias, ipw = r.row("IPW").bias;
    const bool a = raw >= -12 && raw <= -5 && ipw >= -12 && ipw <= -5;
    const bool b = r.row("DM0").rmse < 0.6 * r.row("IPW").rmse;
    const bool c = std::abs(r.row("DM0").bias) < 2.0;
    const double catt_dm = r.row("DM0.5", "catt").bias, catt_raw = r.row("Raw", "catt").bias;
    const bool d = std::abs(catt_dm) < 0.6 * std::abs(catt_raw);
    std::string detail = std::string("(a) ") + (a ? "ok" : "no") + " (b) " + (b ? "ok" : "no") + " (c) " +
                         (c ? "ok" : "no") + " (catt) " + (d ? "ok" : "no") + ";" +
                         row_summary(r, {"Raw", "IPW", "IPWn", "AIPW", "DM0", "DM0.5", "DM0-DR"}) +
                         "; catt" + row_summary(r, {"Raw", "DM0", "DM0.5"}, "catt");
    return {a && b && c && d, detail};
}

// 10. DeepMatch error against n.
Verdict error_decay() {
    DeepOptions o = fc_options();
    o.lambdas = {0.0};
    o.catt = false;
    o.methods = {"DM0"};
    const Pipeline pipe = deep_pipeline(o);
    std::vector<double> mae;
    std::string detail = "mean |error|";
    for (std::size_t n : {250, 500, 1000, 2000}) {
        const ReplicationReport r = replicate(FullyConnectedSpec{n}, pipe, 20, kSeed + 10, threads());
        const auto& row = r.row("DM0");
        double s = 0.0;
        std::size_t k = 0;
        for (double e : row.errors)
            if (std::isfinite(e)) s += std::abs(e), ++k;
        mae.push_back(k ? s / k : NAN);
        detail += " n=" + std::to_string(n) + ": " + fmt(mae.back());
    }
    int steps_down = 0;
    for (std::size_t k = 1; k < mae.size(); ++k) steps_down += mae[k] <= mae[k - 1];
    const bool pass = steps_down >= 2 && mae.back() <= mae.front();
    return {pass, detail + "; nonincreasing steps " + std::to_string(steps_down) + "/3"};
}

// IDX fixture bytes written independently of the parser.
void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
}

bool idx_fixtures(std::string& why) {
    const fs::path dir = fs::temp_directory_path() / "deepmatch_acceptance_idx";
    fs::create_directories(dir);
    RngStream rng(kSeed, 110);
    const std::uint32_t count = 7, rows = 5, cols = 3;
    std::vector<unsigned char> img, lab, pixels;
    put_be32(img, 0x803);
    put_be32(img, count);
    put_be32(img, rows);
    put_be32(img, cols);
    put_be32(lab, 0x801);
    put_be32(lab, count);
    for (std::uint32_t i = 0; i < count * rows * cols; ++i) pixels.push_back(static_cast<unsigned char>(rng.uniform_index(256)));
    pixels[0] = 0;
    pixels[1] = 255;
    img.insert(img.end(), pixels.begin(), pixels.end());
    for (std::uint32_t i = 0; i < count; ++i) lab.push_back(static_cast<unsigned char>(i % 10));
    auto write = [&](const fs::path& p, const std::vector<unsigned char>& bytes, bool gz) {
        if (gz) {
            gzFile f = gzopen(p.string().c_str(), "wb");
            gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
            gzclose(f);
        } else {
            std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                     static_cast<std::streamsize>(bytes.size()));
        }
    };
    for (bool gz : {false, true}) {
        const fs::path ip = dir / (gz ? "img.gz" : "img"), lp = dir / (gz ? "lab.gz" : "lab");
        write(ip, img, gz);
        write(lp, lab, gz);
        const ImageStore s = load_idx(ip, lp);
        if (s.size() != count || s.rows() != rows || s.cols() != cols) return why = "shape", false;
        for (std::uint32_t i = 0; i < count; ++i) {
            if (s.label(i) != i % 10) return why = "label", false;
            const auto im = s.image(i);
            for (std::uint32_t k = 0; k < rows * cols; ++k)
                if (im[k] != pixels[i * rows * cols + k] / 255.0) return why = "pixel", false;
        }
    }
    auto rejects = [&](std::vector<unsigned char> bytes, const std::vector<unsigned char>& labels) {
        write(dir / "bad", bytes, false);
        write(dir / "badl", labels, false);
        try {
            load_idx(dir / "bad", dir / "badl");
        } catch (const FormatError&) {
            return true;
        }
        return false;
    };
    std::vector<unsigned char> truncated(img.begin(), img.end() - 1);
    std::vector<unsigned char> magic = img;
    magic[3] = 0x02;
    std::vector<unsigned char> short_labels(lab.begin(), lab.end() - 1);
    if (!rejects(truncated, lab) || !rejects(magic, lab) || !rejects(img, short_labels))
        return why = "malformed file accepted", false;
    fs::remove_all(dir);
    return true;
}

// 11. Convolutional design at reduced scale.
Verdict convolutional() {
    std::string why;
    const bool parser = idx_fixtures(why);

    cli::ImageSource source;
    source.synthetic_per_digit = 500;
    const bool mnist = std::getenv(cli::kMnistEnv) != nullptr;
    const auto images = cli::load_images(source, kSeed);

    constexpr std::size_t kSide = 14;
    ConvolutionalSpec spec;
    spec.n = 500;
    spec.images = images;
    spec.downscale = 2;
    const DeepOptions o = conv_options(kSide, kSide, 8, 16, 128);
    int dd_wins = 0, bias_wins = 0, runs = 0;
    std::string detail;
    for (int r = 0; r < 10; ++r) {
        RngStream data_rng(kSeed + 11, static_cast<std::uint64_t>(r));
        const Simulation sim = generate(spec, data_rng);
        const Dataset& data = sim.data;
        GameConfig g = o.game;
        g.lambda = 0.0;
        g.psi = 0.0;
        g.grid_size = 6;
        g.runs = 2;
        g.seed = 500 + static_cast<std::uint64_t>(r);
        g.threads = threads();
        const BalanceWeights w = deepmatch_balance(data, g).first;
        const BalanceWeights uniform = BalanceWeights::uniform(data);

        NeuralClass cls;
        cls.architecture = o.game.discriminator;
        cls.training.epochs = 10;
        cls.training.learning_rate = 1e-3;
        cls.training.seed = 900 + static_cast<std::uint64_t>(r);
        const WeightedSample treated = treated_sample(data);
        const double dd_dm = dd(cls, treated, control_sample(data, w), 0.01).squared_value;
        const double dd_uniform = dd(cls, treated, control_sample(data, uniform), 0.01).squared_value;
        dd_wins += dd_dm < dd_uniform;

        const double truth = sim.sample_att();
        const double err_dm = att_weighted(w, data) - truth;
        const double err_raw = att_weighted(uniform, data) - truth;
        bias_wins += std::abs(err_dm) <= std::abs(err_raw);
        ++runs;
        detail += " [" + fmt(dd_dm, 3) + "/" + fmt(dd_uniform, 3) + ", " + fmt(err_dm, 3) + "/" + fmt(err_raw, 3) + "]";
    }
    const bool pass = parser && dd_wins >= 7 && bias_wins >= 7;
    return {pass, std::string("(a) IDX fixtures ") + (parser ? "ok" : "failed: " + why) + " (b) DD lower in " +
                      std::to_string(dd_wins) + "/10 (c) |error| no larger in " + std::to_string(bias_wins) +
                      "/10; images " + (mnist ? "IDX" : "synthetic") +
                      "; per run [DD^2 DM/uniform, error DM/Raw]" + detail};
}

// 12. Monte-Carlo conditional risk against B^2 + V^2.
Verdict risk_oracle() {
    RngStream rng(kSeed, 12);
    int misses = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t n1 = 3 + inst % 5, n0 = 4 + inst % 7, d = 1 + inst % 2;
        const Dataset base = random_data(rng, n1, n0, d, 0.4);
        std::vector<double> wc(n0);
        for (double& v : wc) v = rng.uniform(0.0, 2.0);
        const BalanceWeights w(wc, WeightConvention::Unnormalized, n1);
        const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(0.5, 2.0);
        const CovariateFn f0 = [&](std::span<const double> x) { return a + std::sin(b * x[0]) + x.back() * x.back(); };
        const CovariateFn s2 = [&](std::span<const double> x) { return 0.2 + x[0] * x[0]; };
        const CovariateFn tau = [&](std::span<const double> x) { return 1.0 + x[0]; };
        const double predicted = risk_decomposition(w, f0, s2, base).total();

        constexpr int kDraws = 40000;
        double sum = 0.0, sum_sq = 0.0;
        std::vector<double> y(base.size());
        for (int k = 0; k < kDraws; ++k) {
            double truth = 0.0;
            for (std::size_t i = 0; i < base.size(); ++i) {
                const auto x = base.row(i);
                const double y0 = f0(x) + std::sqrt(s2(x)) * rng.normal();
                if (base.treated(i)) {
                    const double y1 = y0 + tau(x);
                    truth += y1 - y0;
                    y[i] = y1;
                } else {
                    y[i] = y0;
                }
            }
            truth /= static_cast<double>(n1);
            const Dataset draw(base.x(), std::vector<int>(base.treatments().begin(), base.treatments().end()), y);
            const double e = att_weighted(w, draw) - truth;
            sum += e * e;
            sum_sq += e * e * e * e;
        }
        const double mse = sum / kDraws;
        const double se = std::sqrt((sum_sq / kDraws - mse * mse) / (kDraws - 1));
        const double z = std::abs(mse - predicted) / se;
        worst = std::max(worst, z);
        if (z > 3.0) ++misses;
    }
    return {misses == 0, std::to_string(misses) + " instances beyond 3 standard errors; worst |z| " + fmt(worst, 3)};
}

struct Criterion {
    int id;
    const char* title;
    Verdict (*run)();
};

const Criterion kCriteria[] = {
    {1, "closed-form distances", closed_forms},
    {2, "IPM sandwich bounds", sandwich},
    {3, "large-psi limit", psi_limit},
    {4, "primal-dual agreement", duality},
    {5, "objective convexity", convexity},
    {6, "gradient suite", gradients},
    {7, "grid optimality of conditional gradient", grid_optimality},
    {8, "shallow RMSE ordering", shallow_ordering},
    {9, "fully connected table", fully_connected},
    {10, "error decay in n", error_decay},
    {11, "convolutional properties", convolutional},
    {12, "conditional risk decomposition", risk_oracle},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.push_back(std::stoi(tok));
        } else {
            std::cerr << "usage: acceptance [--only 1,2,...]\n";
            return 2;
        }
    }
    bool all = true;
    for (const auto& c : kCriteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all = all && v.pass;
        std::printf("%s %2d %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.title, v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
