#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "deepmatch/error.hpp"
#include "deepmatch/estimators/estimators.hpp"
#include "deepmatch/simulation/dgp.hpp"
#include "deepmatch/simulation/experiments.hpp"
#include "deepmatch/simulation/idx.hpp"
#include "deepmatch/simulation/replicate.hpp"
#include "doctest.h"

using namespace deepmatch;
namespace fs = std::filesystem;

namespace {

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

std::vector<unsigned char> idx_images(std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                                      std::uint32_t cols, const std::vector<unsigned char>& px) {
    std::vector<unsigned char> b;
    put_be32(b, magic);
    put_be32(b, count);
    put_be32(b, rows);
    put_be32(b, cols);
    b.insert(b.end(), px.begin(), px.end());
    return b;
}

std::vector<unsigned char> idx_labels(std::uint32_t magic, const std::vector<unsigned char>& labels) {
    std::vector<unsigned char> b;
    put_be32(b, magic);
    put_be32(b, static_cast<std::uint32_t>(labels.size()));
    b.insert(b.end(), labels.begin(), labels.end());
    return b;
}

fs::path write_file(const std::string& name, const std::vector<unsigned char>& bytes) {
    const fs::path p = fs::temp_directory_path() / ("deepmatch_sim_" + name);
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    return p;
}

fs::path write_gzip(const std::string& name, const std::vector<unsigned char>& bytes) {
    const fs::path p = fs::temp_directory_path() / ("deepmatch_sim_" + name);
    gzFile f = gzopen(p.string().c_str(), "wb");
    gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    return p;
}

const std::vector<unsigned char> kPixels = {0, 255, 51, 102, 204, 153, 1, 254};

}  // namespace

TEST_CASE("idx fixture decodes bit-exactly") {
    const auto img = write_file("img", idx_images(0x803, 2, 2, 2, kPixels));
    const auto lab = write_file("lab", idx_labels(0x801, {7, 3}));
    const ImageStore s = load_idx(img, lab);
    REQUIRE(s.size() == 2);
    CHECK(s.rows() == 2);
    CHECK(s.cols() == 2);
    CHECK(s.label(0) == 7);
    CHECK(s.label(1) == 3);
    for (std::size_t k = 0; k < 8; ++k) CHECK(s.image(k / 4)[k % 4] == kPixels[k] / 255.0);
    CHECK(s.brightness(0) == doctest::Approx((0 + 255 + 51 + 102) / (4 * 255.0)));
    CHECK(s.with_label(3) == std::vector<std::size_t>{1});

    SUBCASE("gzip-wrapped files give the same store") {
        const auto gimg = write_gzip("img.gz", idx_images(0x803, 2, 2, 2, kPixels));
        const auto glab = write_gzip("lab.gz", idx_labels(0x801, {7, 3}));
        const ImageStore g = load_idx(gimg, glab);
        REQUIRE(g.size() == 2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(g.label(i) == s.label(i));
            for (std::size_t k = 0; k < 4; ++k) CHECK(g.image(i)[k] == s.image(i)[k]);
        }
    }
    SUBCASE("format errors") {
        const auto wrong = write_file("lab_wrong", idx_labels(0x803, {7, 3}));
        CHECK_THROWS_AS(load_idx(img, wrong), FormatError);
        CHECK_THROWS_AS(load_idx(lab, lab), FormatError);
        std::vector<unsigned char> shortpx(kPixels.begin(), kPixels.begin() + 6);
        const auto trunc = write_file("img_trunc", idx_images(0x803, 2, 2, 2, shortpx));
        CHECK_THROWS_AS(load_idx(trunc, lab), FormatError);
        const auto three = write_file("lab3", idx_labels(0x801, {7, 3, 1}));
        CHECK_THROWS_AS(load_idx(img, three), FormatError);
        const auto bad_label = write_file("lab_bad", idx_labels(0x801, {7, 12}));
        CHECK_THROWS_AS(load_idx(img, bad_label), FormatError);
        CHECK_THROWS_AS(load_idx(fs::temp_directory_path() / "deepmatch_sim_missing", lab), FormatError);
        auto gz = idx_images(0x803, 2, 2, 2, kPixels);
        const auto gzp = write_gzip("img_cut.gz", gz);
        std::ifstream in(gzp, std::ios::binary);
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
        bytes.resize(bytes.size() / 2);
        const auto cut = write_file("img_cut2.gz", bytes);
        CHECK_THROWS_AS(load_idx(cut, lab), FormatError);
    }
}

TEST_CASE("downscale by block means") {
    const std::vector<double> img = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    CHECK(downscale(img, 4, 4, 1) == img);
    const std::vector<double> constant(36, 0.3);
    for (double v : downscale(constant, 6, 6, 3)) CHECK(v == doctest::Approx(0.3));
    // 2x2 checkerboard blocks.
    const std::vector<double> checker = {1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1};
    CHECK(downscale(checker, 4, 4, 2) == std::vector<double>{1, 0, 0, 1});
    CHECK(downscale(img, 4, 4, 2) == std::vector<double>{2.5, 4.5, 10.5, 12.5});
    CHECK_THROWS_AS(downscale(img, 4, 4, 3), PreconditionError);
    CHECK_THROWS_AS(downscale(img, 4, 4, 0), PreconditionError);

    RngStream rng(1, 0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> r(28 * 28);
        for (double& v : r) v = rng.uniform();
        const auto small = downscale(r, 28, 28, 2);
        const double a = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
        const double b = std::accumulate(small.begin(), small.end(), 0.0) / static_cast<double>(small.size());
        CHECK(a == doctest::Approx(b).epsilon(1e-13));
    }
}

TEST_CASE("synthetic digit store") {
    RngStream rng(2, 0);
    const ImageStore s = synthetic_digits(5, rng);
    CHECK(s.size() == 50);
    CHECK(s.rows() == 28);
    for (int d = 0; d < 10; ++d) CHECK(s.with_label(static_cast<std::uint8_t>(d)).size() == 5);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (double p : s.image(i)) CHECK((p >= 0.0 && p <= 1.0));
    // 1 lights two segments and 8 all seven.
    CHECK(s.brightness(s.with_label(1)[0]) < s.brightness(s.with_label(8)[0]));
    CHECK_THROWS_AS(ImageStore(1, 1, {1.5}, {0}), PreconditionError);
    CHECK_THROWS_AS(ImageStore(1, 1, {0.5}, {10}), PreconditionError);
    CHECK_THROWS_AS(ImageStore(2, 1, {0.5}, {1}), DimensionError);
}

TEST_CASE("shallow design") {
    RngStream rng(3, 0);
    const Simulation sim = generate(ShallowSpec{100000}, rng);
    const double frac = static_cast<double>(sim.data.n_treated()) / 1e5;
    CHECK(std::abs(frac - 0.5) < 0.01);
    CHECK(sim.y0 == sim.y1);
    CHECK(sim.sample_att() == 0.0);
    CHECK(true_att(ShallowSpec{}) == 0.0);
    CHECK(sim.data.dim() == 2);
    for (std::size_t i = 0; i < 1000; ++i) {
        const auto x = sim.data.row(i);
        CHECK(std::abs(x[0]) <= 1.0);
        CHECK(std::abs(x[1]) <= 1.0);
    }
    CHECK_THROWS_AS(generate(ShallowSpec{3}, rng), PreconditionError);
}

TEST_CASE("fully connected design") {
    RngStream rng(4, 0);
    const Simulation sim = generate(FullyConnectedSpec{1000000}, rng);
    const auto& d = sim.data;
    CHECK(std::abs(static_cast<double>(d.n_treated()) / 1e6 - 0.5) < 0.005);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!d.treated(i)) continue;
        s += sim.xh(static_cast<Eigen::Index>(i), 0);
    }
    CHECK(std::abs(s / static_cast<double>(d.n_treated())) < 0.01);
    for (std::size_t i = 0; i < 1000; ++i) {
        double total = 0.0;
        for (double v : d.row(i)) total += v;
        CHECK(sim.y1[i] - sim.y0[i] == doctest::Approx(total - 1.0));
        CHECK(d.y(i) == (d.treated(i) ? sim.y1[i] : sim.y0[i]));
    }
    CHECK(true_att(FullyConnectedSpec{}) == -1.0);
}

TEST_CASE("fully connected truth by direct simulation") {
    // Independent of generate(): same assignment rule drawn inline.
    RngStream rng(5, 0);
    double s = 0.0, odd_treated = 0.0;
    std::size_t k = 0;
    for (int i = 0; i < 10000000; ++i) {
        double total = 0.0;
        int parity = 0;
        for (int j = 0; j < 6; ++j) {
            const double x = rng.uniform(-2.0, 2.0);
            total += x;
            parity ^= x > 0.0;
        }
        if (!rng.bernoulli(parity ? 0.95 : 0.05)) continue;
        s += total - 1.0;
        odd_treated += parity;
        ++k;
    }
    CHECK(std::abs(s / static_cast<double>(k) + 1.0) < 0.003);
    CHECK(odd_treated / static_cast<double>(k) == doctest::Approx(0.95).epsilon(0.002));
}

TEST_CASE("convolutional design on a hand-built store") {
    // Two digits, two images each, brightness 0.1 / 0.3 (digit 0) and 0.5 / 0.7 (digit 5).
    std::vector<double> px;
    for (double b : {0.1, 0.3, 0.5, 0.7})
        for (int k = 0; k < 4; ++k) px.push_back(b);
    auto store = std::make_shared<ImageStore>(2, 2, px, std::vector<std::uint8_t>{0, 0, 5, 5});
    ConvolutionalSpec spec;
    spec.n = 40;
    spec.images = store;
    spec.downscale = 2;
    spec.treated_fraction.fill(0.5);

    RngStream rng(6, 0);
    // Every draw needs both digits present.
    CHECK_THROWS_AS(generate(DgpSpec{spec}, rng), PreconditionError);

    std::vector<double> full;
    std::vector<std::uint8_t> labels;
    for (int d = 0; d < 10; ++d)
        for (double b : {0.1 + 0.05 * d, 0.3 + 0.05 * d}) {
            for (int k = 0; k < 4; ++k) full.push_back(b);
            labels.push_back(static_cast<std::uint8_t>(d));
        }
    spec.images = std::make_shared<ImageStore>(2, 2, full, labels);
    RngStream rng2(6, 1);
    const Simulation sim = generate(DgpSpec{spec}, rng2);
    CHECK(sim.data.dim() == 1);
    double hand = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < sim.data.size(); ++i) {
        const double b = sim.data.row(i)[0];
        CHECK(sim.xh(static_cast<Eigen::Index>(i), 0) == doctest::Approx(b));
        CHECK(sim.y1[i] - sim.y0[i] == doctest::Approx(b - 1.0));
        CHECK((sim.y0[i] >= 0.0 && sim.y0[i] <= 9.0));
        CHECK(std::abs(sim.y0[i] - sim.digits[i]) <= 1.0);
        if (sim.data.treated(i)) {
            hand += b;
            ++k;
        }
    }
    REQUIRE(k > 0);
    CHECK(true_att(DgpSpec{spec}, &sim) == doctest::Approx(hand / static_cast<double>(k) - 1.0));
    CHECK(sim.sample_att() == doctest::Approx(hand / static_cast<double>(k) - 1.0));
    CHECK_THROWS_AS(true_att(DgpSpec{spec}), PreconditionError);

    // Within each digit, every treated unit is at most as bright as every control.
    for (int d = 0; d < 10; ++d) {
        double max_t = -1.0, min_c = 2.0;
        for (std::size_t i = 0; i < sim.data.size(); ++i) {
            if (sim.digits[i] != d) continue;
            const double b = sim.data.row(i)[0];
            if (sim.data.treated(i)) max_t = std::max(max_t, b);
            else min_c = std::min(min_c, b);
        }
        CHECK(max_t <= min_c);
    }

    spec.treated_fraction.fill(0.0);
    RngStream rng3(6, 2);
    const Simulation none = generate(DgpSpec{spec}, rng3);
    CHECK(none.data.n_treated() == 0);
    CHECK_THROWS_AS(att_weighted(BalanceWeights::uniform(none.data), none.data), PreconditionError);
}

TEST_CASE("convolutional design follows the 10/90 split on synthetic digits") {
    RngStream rng(7, 0);
    ConvolutionalSpec spec;
    spec.n = 2000;
    spec.images = std::make_shared<ImageStore>(synthetic_digits(30, rng));
    spec.downscale = 2;
    const Simulation sim = generate(DgpSpec{spec}, rng);
    CHECK(sim.data.dim() == 196);
    std::array<double, 10> treated{}, count{};
    for (std::size_t i = 0; i < sim.data.size(); ++i) {
        count[static_cast<std::size_t>(sim.digits[i])] += 1;
        treated[static_cast<std::size_t>(sim.digits[i])] += sim.data.t(i);
    }
    for (int d = 0; d < 10; ++d) {
        const double f = treated[d] / count[d];
        CHECK(f == doctest::Approx(d < 5 ? 0.1 : 0.9).epsilon(0.05));
    }
}

TEST_CASE("replication statistics") {
    const Pipeline oracle = [](const Simulation& sim, RngStream&) {
        return std::vector<Estimate>{{"oracle", "att", sim.sample_att(), ""}};
    };
    const ReplicationReport zero = replicate(ShallowSpec{50}, oracle, 5, 1);
    const auto& r = zero.row("oracle");
    CHECK(r.bias == 0.0);
    CHECK(r.se == 0.0);
    CHECK(r.rmse == 0.0);
    CHECK(r.count == 5);
    CHECK_THROWS_AS(replicate(ShallowSpec{50}, oracle, 1, 1), PreconditionError);
    CHECK_THROWS_AS(zero.row("missing"), PreconditionError);

    const Pipeline noisy = [](const Simulation& sim, RngStream& rng) {
        std::vector<Estimate> out{{"raw", "att", att_weighted(BalanceWeights::uniform(sim.data), sim.data), ""},
                                  {"noise", "att", rng.normal(), ""}};
        Estimate flaky{"flaky", "att"};
        if (rng.uniform() < 0.5) flaky.error = "boom";
        else flaky.value = 1.0;
        out.push_back(flaky);
        return out;
    };
    const ReplicationReport a = replicate(FullyConnectedSpec{200}, noisy, 12, 9, 1, 42);
    const ReplicationReport b = replicate(FullyConnectedSpec{200}, noisy, 12, 9, 3, 42);
    CHECK(a.config_hash == 42);
    CHECK(a.truth == -1.0);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].method == b.rows[k].method);
        CHECK(a.rows[k].bias == b.rows[k].bias);
        CHECK(a.rows[k].se == b.rows[k].se);
        const auto& s = a.rows[k];
        CHECK(std::abs(s.rmse * s.rmse - s.bias * s.bias - s.se * s.se) < 1e-9);
    }
    const auto& flaky = a.row("flaky");
    CHECK(flaky.failures + flaky.count == 12);
    CHECK(flaky.failures > 0);
    CHECK(flaky.se == 0.0);

    // Bias is measured against the per-replication sample ATT.
    const auto& raw = a.row("raw");
    double manual = 0.0;
    for (double e : raw.errors) manual += e;
    CHECK(raw.bias == doctest::Approx(manual / 12.0));

    const Pipeline explode = [](const Simulation&, RngStream&) -> std::vector<Estimate> {
        throw NumericError("pipeline down");
    };
    const ReplicationReport dead = replicate(ShallowSpec{20}, explode, 3, 1);
    CHECK(dead.failed_replications == 3);
    CHECK(dead.rows.empty());
}

TEST_CASE("method pipelines produce the documented sets") {
    ShallowOptions so;
    so.fw_iterations = 30;
    const ReplicationReport s = replicate(ShallowSpec{120}, shallow_pipeline(so), 3, 5);
    for (const auto& m : shallow_methods()) {
        REQUIRE(s.has(m));
        CHECK(s.row(m).failures == 0);
        CHECK(std::isfinite(s.row(m).rmse));
    }

    DeepOptions o = fc_options();
    o.game.grid_size = 2;
    o.game.runs = 1;
    o.game.epochs_stage1 = 2;
    o.game.epochs_stage2 = 1;
    o.nets.epochs = 2;
    const ReplicationReport d = replicate(FullyConnectedSpec{150}, deep_pipeline(o), 2, 5);
    const auto names = deep_methods(o);
    CHECK(names.size() == 10);
    for (const auto& m : names) {
        REQUIRE(d.has(m));
        CHECK(d.row(m).failures == 0);
    }
    for (const char* m : {"Raw", "IPW", "IPWn", "Regn", "DM0", "DM0.5"}) CHECK(d.has(m, "catt"));
    CHECK_FALSE(d.has("AIPW", "catt"));

    o.methods = {"Raw", "DM0"};
    const ReplicationReport sub = replicate(FullyConnectedSpec{150}, deep_pipeline(o), 2, 5);
    CHECK(sub.rows.size() == 4);
}
