#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace deepmatch::cli {

struct SuiteResult {
    std::string name;
    bool passed = false;
    /// Worst slack against the suite's tolerance; negative means failure.
    double margin = 0.0;
    std::size_t checks = 0;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 20240;
    /// Negative control: perturbs the analytic game gradient before the
    /// finite-difference comparison, so the gradient suite must fail.
    bool corrupt_gradient = false;
};

/// Theorem-property suites at verifier scale: closed forms, bound sandwich,
/// large-psi limit, duality, convexity, gradients, grid optimality and the
/// phi-path equivalence.
std::vector<SuiteResult> run_verify(const VerifyOptions& options = {});

}  // namespace deepmatch::cli
