// Equivalence tests: every SIMD kernel variant must reproduce the scalar
// reference bit for bit, including unaligned tails.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "tabmoe/kernels.hpp"
#include "tabmoe/rng.hpp"

using namespace tabmoe;
using kernels::Isa;
using kernels::Kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -3.0, double hi = 3.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<Isa> simd_variants() {
    std::vector<Isa> out;
    for (Isa isa : kernels::available()) {
        if (isa != Isa::scalar) out.push_back(isa);
    }
    return out;
}

} // namespace

TEST_CASE("dispatch: scalar always available, selection works") {
    auto isas = kernels::available();
    CHECK(!isas.empty());
    CHECK(isas.front() == Isa::scalar);
    CHECK(kernels::select(Isa::scalar));
    CHECK(kernels::active().isa == Isa::scalar);
    CHECK(kernels::select(kernels::best_available()));
}

TEST_CASE("matmul variants match scalar bit for bit") {
    Rng rng(11);
    for (Isa isa : simd_variants()) {
        const Kernels& ref = kernels::table(Isa::scalar);
        const Kernels& simd = kernels::table(isa);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t m = 1 + rng.below(9);
            const std::size_t k = 1 + rng.below(17);
            const std::size_t n = 1 + rng.below(23); // exercises all tail widths
            auto a = random_vec(rng, m * k);
            auto b = random_vec(rng, k * n);
            std::vector<double> c_ref(m * n), c_simd(m * n);
            ref.matmul(a.data(), b.data(), c_ref.data(), m, k, n);
            simd.matmul(a.data(), b.data(), c_simd.data(), m, k, n);
            CHECK(bits_equal(c_ref, c_simd));

            auto acc0 = random_vec(rng, m * n);
            auto acc1 = acc0;
            ref.matmul_acc(a.data(), b.data(), acc0.data(), m, k, n);
            simd.matmul_acc(a.data(), b.data(), acc1.data(), m, k, n);
            CHECK(bits_equal(acc0, acc1));
        }
    }
}

TEST_CASE("elementwise variants match scalar bit for bit") {
    Rng rng(12);
    for (Isa isa : simd_variants()) {
        const Kernels& ref = kernels::table(Isa::scalar);
        const Kernels& simd = kernels::table(isa);
        for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 17u, 64u, 1001u}) {
            auto a = random_vec(rng, n);
            auto b = random_vec(rng, n);
            std::vector<double> r(n), s(n);

            ref.add(a.data(), b.data(), r.data(), n);
            simd.add(a.data(), b.data(), s.data(), n);
            CHECK(bits_equal(r, s));

            ref.sub(a.data(), b.data(), r.data(), n);
            simd.sub(a.data(), b.data(), s.data(), n);
            CHECK(bits_equal(r, s));

            ref.mul(a.data(), b.data(), r.data(), n);
            simd.mul(a.data(), b.data(), s.data(), n);
            CHECK(bits_equal(r, s));

            auto acc_r = random_vec(rng, n);
            auto acc_s = acc_r;
            ref.mul_acc(a.data(), b.data(), acc_r.data(), n);
            simd.mul_acc(a.data(), b.data(), acc_s.data(), n);
            CHECK(bits_equal(acc_r, acc_s));

            acc_s = acc_r;
            ref.axpy(0.37, a.data(), acc_r.data(), n);
            simd.axpy(0.37, a.data(), acc_s.data(), n);
            CHECK(bits_equal(acc_r, acc_s));

            ref.scale(a.data(), -1.7, r.data(), n);
            simd.scale(a.data(), -1.7, s.data(), n);
            CHECK(bits_equal(r, s));

            ref.relu(a.data(), r.data(), n);
            simd.relu(a.data(), s.data(), n);
            CHECK(bits_equal(r, s));

            auto gin_r = random_vec(rng, n);
            auto gin_s = gin_r;
            ref.relu_backward(a.data(), b.data(), gin_r.data(), n);
            simd.relu_backward(a.data(), b.data(), gin_s.data(), n);
            CHECK(bits_equal(gin_r, gin_s));
        }
    }
}

TEST_CASE("adamw variants match scalar bit for bit") {
    Rng rng(13);
    for (Isa isa : simd_variants()) {
        const Kernels& ref = kernels::table(Isa::scalar);
        const Kernels& simd = kernels::table(isa);
        for (std::size_t n : {1u, 5u, 16u, 37u, 256u}) {
            kernels::AdamwArgs args{1e-3, 0.9, 0.999, 1e-8, 0.01, 1.0 / (1.0 - 0.9),
                                    1.0 / (1.0 - 0.999)};
            auto p0 = random_vec(rng, n);
            auto g = random_vec(rng, n);
            auto m0 = random_vec(rng, n, -0.1, 0.1);
            auto v0 = random_vec(rng, n, 0.0, 0.1);
            auto p1 = p0;
            auto m1 = m0;
            auto v1 = v0;
            ref.adamw_update(p0.data(), g.data(), m0.data(), v0.data(), n, args);
            simd.adamw_update(p1.data(), g.data(), m1.data(), v1.data(), n, args);
            CHECK(bits_equal(p0, p1));
            CHECK(bits_equal(m0, m1));
            CHECK(bits_equal(v0, v1));
        }
    }
}

TEST_CASE("relu handles signed zero and NaN like the reference") {
    std::vector<double> special = {-0.0, 0.0, std::nan(""), -1.5, 2.5, -0.0, 1.0, -3.0, 0.0};
    const std::size_t n = special.size();
    for (Isa isa : simd_variants()) {
        std::vector<double> r(n), s(n);
        kernels::table(Isa::scalar).relu(special.data(), r.data(), n);
        kernels::table(isa).relu(special.data(), s.data(), n);
        CHECK(bits_equal(r, s));
    }
}
