#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace tabmoe {

/// Deterministic random stream keyed by (seed, stream id). The engine is
/// std::mt19937_64 (its output sequence is pinned by the standard), but all
/// value mappings — uniform doubles, bounded ints, normals, shuffles — are
/// implemented here because the stdlib distributions are not portable.
/// Identical (seed, stream, call sequence) gives identical draws on every
/// platform. Derive substreams instead of sharing one stream across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// Independent child stream; distinct ids give distinct streams.
    Rng substream(std::uint64_t id) const;

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform on the open interval, clamped to [2^-53, 1 - 2^-53].
    double uniform_open();

    /// Unbiased integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via Box-Muller (one spare cached).
    double normal();

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace tabmoe
