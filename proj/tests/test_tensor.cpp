#include "doctest.h"

#include <cmath>

#include "mtcn/gradcheck.hpp"
#include "mtcn/prng.hpp"
#include "mtcn/tensor.hpp"

using namespace mtcn;

TEST_CASE("tensor_new fills and validates shape") {
    Tensor z = tensor_new<float>({2, 2}, 0.0f);
    CHECK(z.size() == 4);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0f);

    Tensor t = tensor_new<float>({3}, 1.5f);
    CHECK(t.size() == 3);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 1.5f);

    CHECK_THROWS_AS(tensor_new<float>({2, 0}, 0.0f), ShapeError);
}

TEST_CASE("row-major index arithmetic round-trips") {
    Tensor t({3, 4, 5});
    std::size_t expect = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 5; ++k) {
                CHECK(t.flat_index({i, j, k}) == (i * 4 + j) * 5 + k);
                CHECK(t.flat_index({i, j, k}) == expect);
                ++expect;
            }
}

TEST_CASE("prng is deterministic per seed") {
    Prng a(42);
    Prng b(42);
    const double a1 = a.uniform(0, 1), a2 = a.uniform(0, 1);
    CHECK(a1 != a2);
    CHECK(b.uniform(0, 1) == a1);
    CHECK(b.uniform(0, 1) == a2);
}

TEST_CASE("prng stream matches the published splitmix64 vectors for seed 0") {
    Prng fresh(0);
    CHECK(fresh.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(fresh.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(fresh.next_u64() == 0x06C45D188009454FULL);
}

TEST_CASE("prng uniform respects range and rejects bad range") {
    Prng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(0, 1);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    CHECK_THROWS_AS(rng.uniform(1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(rng.uniform(2.0, 1.0), ConfigError);
}

TEST_CASE("prng sample mean converges (law of large numbers at fixed seed)") {
    Prng rng(42);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.uniform(0, 1);
    CHECK(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("finite_diff_grad on linear, quadratic, constant") {
    DTensor x = DTensor::from_data({2}, {1.0, 2.0});

    auto sum = [](const DTensor& t) {
        double s = 0;
        for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
        return s;
    };
    DTensor g1 = finite_diff_grad(sum, x, 1e-5);
    CHECK(std::fabs(g1[0] - 1.0) < 1e-8);
    CHECK(std::fabs(g1[1] - 1.0) < 1e-8);

    auto sumsq = [](const DTensor& t) {
        double s = 0;
        for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
        return s;
    };
    DTensor g2 = finite_diff_grad(sumsq, x, 1e-5);
    CHECK(std::fabs(g2[0] - 2.0) < 1e-6);
    CHECK(std::fabs(g2[1] - 4.0) < 1e-6);

    auto constant = [](const DTensor&) { return 3.25; };
    DTensor g3 = finite_diff_grad(constant, x, 1e-5);
    CHECK(std::fabs(g3[0]) < 1e-9);
    CHECK(std::fabs(g3[1]) < 1e-9);
}

TEST_CASE("finite_diff_grad matches analytic gradient for random quadratics") {
    // p(x) = sum a_i x_i^2 + b_i x_i + c, gradient 2 a_i x_i + b_i.
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Prng rng(seed);
        DTensor x({6});
        DTensor a({6}), b({6});
        for (std::size_t i = 0; i < 6; ++i) {
            x[i] = rng.uniform(-2, 2);
            a[i] = rng.uniform(-1, 1);
            b[i] = rng.uniform(-1, 1);
        }
        auto poly = [&](const DTensor& t) {
            double s = 0.7;
            for (std::size_t i = 0; i < t.size(); ++i) s += a[i] * t[i] * t[i] + b[i] * t[i];
            return s;
        };
        DTensor g = finite_diff_grad(poly, x, 1e-5);
        DTensor expect({6});
        for (std::size_t i = 0; i < 6; ++i) expect[i] = 2 * a[i] * x[i] + b[i];
        CHECK(max_rel_error(g, expect) < 1e-6);
    }
}

TEST_CASE("finite_diff_grad rejects non-finite function output") {
    DTensor x = DTensor::from_data({1}, {0.0});
    auto bad = [](const DTensor& t) { return std::log(t[0]); }; // NaN at x - eps
    CHECK_THROWS_AS(finite_diff_grad(bad, x, 1e-5), NumericError);
}
