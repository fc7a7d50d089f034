#include "deepmatch/numerics/rng.hpp"

#include <cmath>
#include <numbers>

#include "deepmatch/error.hpp"
#include "deepmatch/numerics/dense.hpp"

namespace deepmatch {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

bool all_finite(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(mix64(seed) ^ mix64(stream + kGolden) * 3)) {}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
    // 1 - u lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::size_t RngStream::uniform_index(std::size_t n) {
    if (n == 0) throw PreconditionError("uniform_index: empty range");
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

RngStream RngStream::child(std::uint64_t index) const {
    return RngStream(mix64(key_ ^ 0x5851F42D4C957F2DULL), index);
}

}  // namespace deepmatch
