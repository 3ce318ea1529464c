#include "doctest.h"

#include <cmath>

#include "mtcn/gradcheck.hpp"
#include "mtcn/optimizer.hpp"
#include "mtcn/prng.hpp"

using namespace mtcn;

TEST_CASE("nadam: zero gradient leaves params unchanged") {
    TensorT<double> params({4}, 1.5);
    TensorT<double> grads({4}, 0.0);
    NadamStateT<double> state(params.shape());
    nadam_step(params, grads, state, 1, NadamConfig{});
    for (std::size_t i = 0; i < params.size(); ++i) CHECK(params[i] == 1.5);
}

TEST_CASE("nadam: degenerate betas reduce to a normalized step") {
    // beta1 = beta2 = 0: update is lr * g / (|g| + eps).
    TensorT<double> params({1}, 1.0);
    TensorT<double> grads({1}, 1.0);
    NadamStateT<double> state(params.shape());
    NadamConfig cfg;
    cfg.beta1 = 0.0;
    cfg.beta2 = 0.0;
    nadam_step(params, grads, state, 1, cfg);
    CHECK(params[0] == doctest::Approx(1.0 - 0.002 / (1.0 + 1e-8)).epsilon(1e-12));
}

namespace {

// Independent scalar reference for the update rule; kept separate from
// the tensor implementation on purpose.
struct ScalarNadamRef {
    double m = 0, n = 0;
    double theta;
    explicit ScalarNadamRef(double theta0) : theta(theta0) {}
    void step(double g, int t, double lr = 0.002, double b1 = 0.9, double b2 = 0.999,
              double eps = 1e-8) {
        m = b1 * m + (1 - b1) * g;
        n = b2 * n + (1 - b2) * g * g;
        const double m_hat = m / (1 - std::pow(b1, t));
        const double n_hat = n / (1 - std::pow(b2, t));
        theta -= lr * (b1 * m_hat + (1 - b1) * g / (1 - std::pow(b1, t))) /
                 (std::sqrt(n_hat) + eps);
    }
};

} // namespace

TEST_CASE("nadam trajectory matches the scalar reference") {
    TensorT<double> params({1}, 1.0);
    NadamStateT<double> state(params.shape());
    ScalarNadamRef ref(1.0);
    for (int t = 1; t <= 3; ++t) {
        TensorT<double> g({1}, 1.0);
        nadam_step(params, g, state, static_cast<std::uint64_t>(t), NadamConfig{});
        ref.step(1.0, t);
        CHECK(std::fabs(params[0] - ref.theta) < 1e-12);
    }
}

TEST_CASE("nadam is deterministic and rejects non-finite gradients") {
    TensorT<float> a({3}, 0.5f), b({3}, 0.5f);
    TensorT<float> g = TensorT<float>::from_data({3}, {0.1f, -0.2f, 0.3f});
    NadamStateT<float> sa(a.shape()), sb(b.shape());
    nadam_step(a, g, sa, 1, NadamConfig{});
    nadam_step(b, g, sb, 1, NadamConfig{});
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);

    TensorT<float> bad = TensorT<float>::from_data({3}, {0.1f, NAN, 0.3f});
    CHECK_THROWS_AS(nadam_step(a, bad, sa, 2, NadamConfig{}, "w"), NumericError);
}

TEST_CASE("nadam with lr=0 never changes parameters") {
    TensorT<double> params({5}, 2.0);
    NadamStateT<double> state(params.shape());
    NadamConfig cfg;
    cfg.lr = 0.0;
    Prng rng(4);
    for (std::uint64_t t = 1; t <= 50; ++t) {
        TensorT<double> g({5});
        for (std::size_t i = 0; i < 5; ++i) g[i] = rng.uniform(-1, 1);
        nadam_step(params, g, state, t, cfg);
    }
    for (std::size_t i = 0; i < 5; ++i) CHECK(params[i] == 2.0);
}

TEST_CASE("l2_apply penalty and gradient") {
    TensorT<double> w = TensorT<double>::from_data({2}, {1.0, -1.0});

    auto [p0, g0] = l2_apply(w, L2Config{0.0});
    CHECK(p0 == 0.0);
    for (std::size_t i = 0; i < 2; ++i) CHECK(g0[i] == 0.0);

    auto [p, g] = l2_apply(w, L2Config{0.01});
    CHECK(p == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(g[0] == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(-0.02).epsilon(1e-12));
}

TEST_CASE("l2 gradient matches finite differences") {
    Prng rng(12);
    DTensor w({7});
    for (std::size_t i = 0; i < 7; ++i) w[i] = rng.uniform(-2, 2);
    const L2Config cfg{0.01};
    auto [p, g] = l2_apply(w, cfg);
    auto f = [&](const DTensor& x) { return l2_penalty(x, cfg); };
    DTensor fd = finite_diff_grad(f, w, 1e-5);
    for (std::size_t i = 0; i < 7; ++i) CHECK(std::fabs(fd[i] - g[i]) < 1e-8);
}
