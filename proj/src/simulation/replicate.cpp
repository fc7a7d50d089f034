#include "deepmatch/simulation/replicate.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "deepmatch/error.hpp"

namespace deepmatch {

namespace {

struct RepResult {
    std::vector<Estimate> estimates;
    double att_truth = std::numeric_limits<double>::quiet_NaN();
    std::string failure;
};

RepResult run_one(const DgpSpec& spec, const Pipeline& pipeline, std::uint64_t seed, std::size_t r) {
    RepResult out;
    try {
        RngStream rng(seed, r);
        const Simulation sim = generate(spec, rng);
        RngStream methods = rng.child(1);
        try {
            out.att_truth = sim.sample_att();
        } catch (const PreconditionError&) {
        }
        out.estimates = pipeline(sim, methods);
    } catch (const std::exception& e) {
        out.failure = e.what();
    }
    return out;
}

}  // namespace

const MethodStats& ReplicationReport::row(const std::string& method, const std::string& target) const {
    for (const auto& r : rows)
        if (r.method == method && r.target == target) return r;
    throw PreconditionError("report has no row " + method + "/" + target);
}

bool ReplicationReport::has(const std::string& method, const std::string& target) const {
    for (const auto& r : rows)
        if (r.method == method && r.target == target) return true;
    return false;
}

void summarize(MethodStats& s, const std::vector<double>& estimates) {
    double err_sum = 0.0, est_sum = 0.0;
    s.count = 0;
    for (std::size_t k = 0; k < s.errors.size(); ++k) {
        if (!std::isfinite(s.errors[k])) continue;
        err_sum += s.errors[k];
        est_sum += estimates[k];
        ++s.count;
    }
    if (s.count == 0) {
        s.bias = s.se = s.rmse = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    s.bias = err_sum / static_cast<double>(s.count);
    const double mean = est_sum / static_cast<double>(s.count);
    double ss = 0.0;
    for (std::size_t k = 0; k < s.errors.size(); ++k)
        if (std::isfinite(s.errors[k])) ss += (estimates[k] - mean) * (estimates[k] - mean);
    s.se = s.count > 1 ? std::sqrt(ss / static_cast<double>(s.count - 1)) : 0.0;
    s.rmse = std::sqrt(s.bias * s.bias + s.se * s.se);
}

ReplicationReport replicate(const DgpSpec& spec, const Pipeline& pipeline, std::size_t reps,
                            std::uint64_t seed, unsigned threads, std::uint64_t config_hash) {
    if (reps < 2) throw PreconditionError("replicate: need at least 2 replications");
    validate(spec);
    std::vector<RepResult> results(reps);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < reps;) results[r] = run_one(spec, pipeline, seed, r);
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    ReplicationReport report;
    report.dgp = dgp_name(spec);
    report.seed = seed;
    report.n = dgp_size(spec);
    report.reps = reps;
    report.config_hash = config_hash;
    if (!std::holds_alternative<ConvolutionalSpec>(spec)) report.truth = true_att(spec);

    std::vector<std::vector<double>> estimates;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (std::size_t r = 0; r < reps; ++r) {
        for (const auto& e : results[r].estimates) {
            const auto key = std::make_pair(e.method, e.target);
            if (index.count(key)) continue;
            index[key] = report.rows.size();
            MethodStats s;
            s.method = e.method;
            s.target = e.target;
            s.errors.assign(reps, std::numeric_limits<double>::quiet_NaN());
            s.messages.assign(reps, {});
            report.rows.push_back(std::move(s));
            estimates.emplace_back(reps, std::numeric_limits<double>::quiet_NaN());
        }
    }
    for (std::size_t r = 0; r < reps; ++r) {
        const RepResult& rr = results[r];
        report.sample_truth.push_back(rr.att_truth);
        if (!rr.failure.empty()) ++report.failed_replications;
        for (const auto& e : rr.estimates) {
            const std::size_t k = index.at({e.method, e.target});
            const double truth = e.target == "catt" ? kTrueCattSlope : rr.att_truth;
            report.rows[k].messages[r] = e.error;
            if (std::isfinite(e.value) && std::isfinite(truth)) {
                estimates[k][r] = e.value;
                report.rows[k].errors[r] = e.value - truth;
            } else if (e.error.empty()) {
                report.rows[k].messages[r] = "non-finite estimate";
            }
        }
    }
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        auto& s = report.rows[k];
        summarize(s, estimates[k]);
        s.failures = reps - s.count;
    }
    return report;
}

}  // namespace deepmatch
