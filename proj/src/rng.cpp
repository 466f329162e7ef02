#include "tabmoe/rng.hpp"

#include <cmath>
#include <numbers>

#include "tabmoe/errors.hpp"

namespace tabmoe {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::seed_seq seq{seed, stream};
    engine_.seed(seq);
}

Rng Rng::substream(std::uint64_t id) const {
    return Rng(seed_, splitmix64(stream_ ^ splitmix64(id)));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
    // 53 high bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::uniform_open() {
    constexpr double eps = 0x1.0p-53;
    double u = uniform();
    if (u < eps) u = eps;
    if (u > 1.0 - eps) u = 1.0 - eps;
    return u;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw DomainError("Rng::below: bound must be positive");
    const std::uint64_t threshold = (-bound) % bound; // 2^64 mod bound
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % bound;
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

} // namespace tabmoe
