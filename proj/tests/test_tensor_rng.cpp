#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "tabmoe/errors.hpp"
#include "tabmoe/rng.hpp"
#include "tabmoe/tensor.hpp"

using namespace tabmoe;

TEST_CASE("tensor construction enforces shape/data agreement") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), DimensionError);
    CHECK_THROWS_AS(Tensor({0}), DimensionError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t.all_finite());
}

TEST_CASE("from_values rejects non-finite input") {
    CHECK_THROWS_AS(Tensor::from_values({2}, {1.0, std::nan("")}), ValidationError);
    CHECK_THROWS_AS(Tensor::from_values({1}, {INFINITY}), ValidationError);
    CHECK_NOTHROW(Tensor::from_values({2}, {1.0, -2.0}));
}

TEST_CASE("matmul identity, hand product, zeros") {
    const Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
    const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    CHECK(testing::bits_equal(matmul(eye, a), a));

    const Tensor row = Tensor::matrix(1, 2, {1, 2});
    const Tensor col = Tensor::matrix(2, 1, {3, 4});
    const Tensor prod = matmul(row, col);
    CHECK(prod.rows() == 1);
    CHECK(prod[0] == doctest::Approx(11.0));

    const Tensor z = Tensor::zeros({2, 3});
    const Tensor b = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
    const Tensor zz = matmul(z, b);
    for (std::size_t i = 0; i < zz.size(); ++i) CHECK(zz[i] == 0.0);
}

TEST_CASE("matmul shape error names both shapes") {
    const Tensor a = Tensor::zeros({2, 3});
    const Tensor b = Tensor::zeros({2, 3});
    try {
        (void)matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
    }
}

TEST_CASE("transpose round trip") {
    Rng rng(5);
    const Tensor a = testing::random_tensor(rng, {3, 5});
    CHECK(testing::bits_equal(transpose(transpose(a)), a));
}

TEST_CASE("rng determinism and stream independence") {
    Rng a(42, 1), b(42, 1), c(42, 2);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Rng parent(7, 3);
    Rng s1 = parent.substream(0);
    Rng s2 = parent.substream(1);
    Rng s1_again = parent.substream(0);
    CHECK(s1.next_u64() == s1_again.next_u64());
    CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("uniform ranges and open-interval clamp") {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_open();
        CHECK(v >= 0x1.0p-53);
        CHECK(v <= 1.0 - 0x1.0p-53);
    }
}

TEST_CASE("bounded ints stay in range and cover values") {
    Rng rng(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK_THROWS_AS(rng.below(0), DomainError);
}

TEST_CASE("shuffle is a deterministic permutation") {
    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> v2 = v1;
    Rng a(9, 4), b(9, 4);
    a.shuffle(v1);
    b.shuffle(v2);
    CHECK(v1 == v2);
    std::vector<int> sorted = v1;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("normal draws have standard moments") {
    Rng rng(13);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}
