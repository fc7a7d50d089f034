#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace deepmatch {

/// Counter-based random stream addressed by (seed, stream).
///
/// Draw k of a stream is a pure function of (seed, stream, k): the SplitMix64
/// finalizer applied to a per-stream key plus k times the golden-ratio
/// increment. Two streams with the same seed never share state, so
/// replications and restarts can run on any number of workers and still
/// produce identical results.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t position() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller; consumes two draws per call.
    double normal();
    bool bernoulli(double p);
    /// Uniform integer in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n);

    /// Independent child stream, e.g. one per restart inside a replication.
    RngStream child(std::uint64_t index) const;

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace deepmatch
