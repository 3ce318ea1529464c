#ifndef MTCN_OPTIMIZER_HPP
#define MTCN_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "mtcn/tensor.hpp"

namespace mtcn {

// Adam with Nesterov momentum, plain formulation (no momentum-schedule
// warmup). beta1/beta2/epsilon are the standard Adam defaults; only the
// learning rate is task-specific.
struct NadamConfig {
    double lr = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct NadamStateT {
    TensorT<T> m; // first moment
    TensorT<T> n; // second moment
    std::uint64_t t = 0;

    explicit NadamStateT(const std::vector<std::size_t>& shape) : m(shape), n(shape) {}
};

// One NAdam step on a single parameter tensor. The caller advances the
// shared step counter once per optimizer step and passes it in; m/n stay
// per-tensor.
template <typename T>
void nadam_step(TensorT<T>& params, const TensorT<T>& grads, NadamStateT<T>& state,
                std::uint64_t step, const NadamConfig& cfg,
                const std::string& tensor_name = "") {
    if (!params.same_shape(grads) || !params.same_shape(state.m))
        throw ShapeError("nadam_step: shape mismatch for " + tensor_name);
    state.t = step;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        if (!std::isfinite(g))
            throw NumericError("nadam_step: non-finite gradient in tensor '" + tensor_name + "'");
        const double m = b1 * state.m[i] + (1.0 - b1) * g;
        const double n = b2 * state.n[i] + (1.0 - b2) * g * g;
        state.m[i] = static_cast<T>(m);
        state.n[i] = static_cast<T>(n);
        const double m_hat = m / bc1;
        const double n_hat = n / bc2;
        const double update = cfg.lr * (b1 * m_hat + (1.0 - b1) * g / bc1) /
                              (std::sqrt(n_hat) + cfg.epsilon);
        params[i] = static_cast<T>(params[i] - update);
    }
}

// L2 penalty lambda * sum(w^2) with gradient 2*lambda*w. Applied to
// weight tensors only, never biases.
struct L2Config {
    double lambda = 0.01;
};

template <typename T>
double l2_penalty(const TensorT<T>& weights, const L2Config& cfg) {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        s += static_cast<double>(weights[i]) * static_cast<double>(weights[i]);
    return cfg.lambda * s;
}

template <typename T>
std::pair<double, TensorT<T>> l2_apply(const TensorT<T>& weights, const L2Config& cfg) {
    TensorT<T> grad(weights.shape());
    const T two_lambda = static_cast<T>(2.0 * cfg.lambda);
    for (std::size_t i = 0; i < weights.size(); ++i)
        grad[i] = two_lambda * weights[i];
    return {l2_penalty(weights, cfg), std::move(grad)};
}

template <typename T>
void l2_add_grad(const TensorT<T>& weights, const L2Config& cfg, TensorT<T>& grad) {
    if (!weights.same_shape(grad))
        throw ShapeError("l2_add_grad: shape mismatch");
    const T two_lambda = static_cast<T>(2.0 * cfg.lambda);
    for (std::size_t i = 0; i < weights.size(); ++i)
        grad[i] += two_lambda * weights[i];
}

} // namespace mtcn

#endif
