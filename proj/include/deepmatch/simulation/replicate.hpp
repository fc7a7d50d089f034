#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "deepmatch/simulation/dgp.hpp"

namespace deepmatch {

/// One method's output on one replication. `target` is "att" or "catt"
/// (slope of the linear CATT in xh). A failed method leaves value NaN and
/// puts the message in `error`.
struct Estimate {
    std::string method;
    std::string target = "att";
    double value = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

/// Runs every method on one simulated dataset.
using Pipeline = std::function<std::vector<Estimate>(const Simulation&, RngStream&)>;

struct MethodStats {
    std::string method;
    std::string target;
    double bias = 0.0;
    double se = 0.0;  // sample standard deviation of the estimates
    double rmse = 0.0;
    std::size_t count = 0;     // successful replications
    std::size_t failures = 0;
    std::vector<double> errors;  // estimate - truth per replication, NaN on failure
    std::vector<std::string> messages;
};

struct ReplicationReport {
    std::string dgp;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t reps = 0;
    double truth = std::numeric_limits<double>::quiet_NaN();  // population ATT when known
    std::uint64_t config_hash = 0;
    std::vector<MethodStats> rows;
    std::vector<double> sample_truth;  // tau_{n1} per replication
    std::size_t failed_replications = 0;

    /// Throws PreconditionError when absent.
    const MethodStats& row(const std::string& method, const std::string& target = "att") const;
    bool has(const std::string& method, const std::string& target = "att") const;
};

/// bias = mean(err), SE = sd of estimates (n - 1), RMSE = sqrt(bias^2 + SE^2).
void summarize(MethodStats& stats, const std::vector<double>& estimates);

/// Replication r generates its data from RngStream(seed, r) and hands the
/// pipeline the child stream 1 of that generator. Results do not depend on
/// `threads`. Truth is tau_{n1} for "att" and the true slope for "catt".
ReplicationReport replicate(const DgpSpec& spec, const Pipeline& pipeline, std::size_t reps,
                            std::uint64_t seed, unsigned threads = 1,
                            std::uint64_t config_hash = 0);

}  // namespace deepmatch
