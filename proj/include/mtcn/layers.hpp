#ifndef MTCN_LAYERS_HPP
#define MTCN_LAYERS_HPP

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mtcn/prng.hpp"
#include "mtcn/tensor.hpp"

namespace mtcn {

// Convolution is implemented as cross-correlation (no kernel flip); the
// kernels are learned, so the orientation is unobservable. Valid padding:
// the kernel slides fully inside the input, output shrinks by kernel-1.

template <typename T>
struct ConvParamsT {
    TensorT<T> kernel; // [filters, kh, kw, in_channels]
    TensorT<T> bias;   // [filters]
    std::size_t stride_h = 1;
    std::size_t stride_w = 1;
};

struct PoolParams {
    std::size_t window_h = 2;
    std::size_t window_w = 2;
    std::size_t stride_h = 2;
    std::size_t stride_w = 2;
};

template <typename T>
struct DenseParamsT {
    TensorT<T> weights; // [out_units, in_units]
    TensorT<T> bias;    // [out_units]
};

template <typename T>
struct ConvCacheT {
    TensorT<T> input;
};

struct PoolCache {
    std::vector<std::size_t> in_shape;       // [H, W, C]
    std::vector<std::size_t> out_shape;      // [H', W', C]
    std::vector<std::uint32_t> argmax_flat;  // per output element, flat index into input
};

template <typename T>
struct DenseCacheT {
    TensorT<T> input;
};

template <typename T>
struct ReluCacheT {
    TensorT<T> input;
};

struct DropoutCache {
    std::vector<std::uint8_t> keep; // per element, 1 = kept
    float scale = 1.0f;             // 1/(1-rate)
};

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t s) {
    return (in - k) / s + 1;
}

template <typename T>
std::pair<TensorT<T>, ConvCacheT<T>>
conv2d_forward(const TensorT<T>& input, const ConvParamsT<T>& p) {
    const auto& ks = p.kernel.shape();
    const std::size_t filters = ks[0], kh = ks[1], kw = ks[2], kc = ks[3];
    const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
    if (c != kc)
        throw ShapeError("conv2d: input channels " + std::to_string(c) +
                         " != kernel channels " + std::to_string(kc));
    if (h < kh || w < kw)
        throw ShapeError("conv2d: kernel larger than input");

    const std::size_t oh = conv_out_extent(h, kh, p.stride_h);
    const std::size_t ow = conv_out_extent(w, kw, p.stride_w);
    TensorT<T> out({oh, ow, filters});

    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::size_t iy0 = oy * p.stride_h;
            const std::size_t ix0 = ox * p.stride_w;
            for (std::size_t f = 0; f < filters; ++f) {
                T acc = p.bias[f];
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const T* in_row = &input.at(iy0 + ky, ix0, 0);
                    const T* k_row = &p.kernel.at(f, ky, 0, 0);
                    for (std::size_t kx = 0; kx < kw * kc; ++kx)
                        acc += k_row[kx] * in_row[kx];
                }
                out.at(oy, ox, f) = acc;
            }
        }
    }
    return {std::move(out), ConvCacheT<T>{input}};
}

// Gradients of sum(grad_out * output) w.r.t. input, kernel, and bias.
template <typename T>
void conv2d_backward(const TensorT<T>& grad_out, const ConvCacheT<T>& cache,
                     const ConvParamsT<T>& p, TensorT<T>& grad_in,
                     TensorT<T>& grad_kernel, TensorT<T>& grad_bias) {
    const auto& ks = p.kernel.shape();
    const std::size_t filters = ks[0], kh = ks[1], kw = ks[2], kc = ks[3];
    const TensorT<T>& input = cache.input;
    const std::size_t h = input.extent(0), w = input.extent(1);
    const std::size_t oh = conv_out_extent(h, kh, p.stride_h);
    const std::size_t ow = conv_out_extent(w, kw, p.stride_w);
    if (grad_out.shape() != std::vector<std::size_t>{oh, ow, filters})
        throw ShapeError("conv2d_backward: grad_out shape does not match cached forward");

    grad_in = TensorT<T>(input.shape());
    grad_kernel = TensorT<T>(p.kernel.shape());
    grad_bias = TensorT<T>(p.bias.shape());

    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::size_t iy0 = oy * p.stride_h;
            const std::size_t ix0 = ox * p.stride_w;
            for (std::size_t f = 0; f < filters; ++f) {
                const T g = grad_out.at(oy, ox, f);
                if (g == T(0)) continue;
                grad_bias[f] += g;
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const T* in_row = &input.at(iy0 + ky, ix0, 0);
                    T* gin_row = &grad_in.at(iy0 + ky, ix0, 0);
                    const T* k_row = &p.kernel.at(f, ky, 0, 0);
                    T* gk_row = &grad_kernel.at(f, ky, 0, 0);
                    for (std::size_t kx = 0; kx < kw * kc; ++kx) {
                        gk_row[kx] += g * in_row[kx];
                        gin_row[kx] += g * k_row[kx];
                    }
                }
            }
        }
    }
}

// Floor semantics: windows that would overrun the edge are dropped.
// Argmax ties go to the first element in row-major window order.
template <typename T>
std::pair<TensorT<T>, PoolCache>
maxpool_forward(const TensorT<T>& input, const PoolParams& p) {
    const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
    if (h < p.window_h || w < p.window_w)
        throw ShapeError("maxpool: window larger than input");
    const std::size_t oh = conv_out_extent(h, p.window_h, p.stride_h);
    const std::size_t ow = conv_out_extent(w, p.window_w, p.stride_w);

    TensorT<T> out({oh, ow, c});
    PoolCache cache;
    cache.in_shape = input.shape();
    cache.out_shape = out.shape();
    cache.argmax_flat.resize(out.size());

    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t iy0 = oy * p.stride_h;
                const std::size_t ix0 = ox * p.stride_w;
                std::size_t best = (iy0 * w + ix0) * c + ch;
                T best_v = input[best];
                for (std::size_t wy = 0; wy < p.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < p.window_w; ++wx) {
                        const std::size_t flat = ((iy0 + wy) * w + ix0 + wx) * c + ch;
                        if (input[flat] > best_v) {
                            best_v = input[flat];
                            best = flat;
                        }
                    }
                }
                const std::size_t oflat = (oy * ow + ox) * c + ch;
                out[oflat] = best_v;
                cache.argmax_flat[oflat] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
TensorT<T> maxpool_backward(const TensorT<T>& grad_out, const PoolCache& cache) {
    if (grad_out.shape() != cache.out_shape)
        throw ShapeError("maxpool_backward: grad_out shape does not match cached forward");
    TensorT<T> grad_in(cache.in_shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        grad_in[cache.argmax_flat[i]] += grad_out[i];
    return grad_in;
}

template <typename T>
std::pair<TensorT<T>, DenseCacheT<T>>
dense_forward(const TensorT<T>& input, const DenseParamsT<T>& p) {
    const std::size_t out_n = p.weights.extent(0), in_n = p.weights.extent(1);
    if (input.size() != in_n)
        throw ShapeError("dense: input length " + std::to_string(input.size()) +
                         " != in_units " + std::to_string(in_n));
    TensorT<T> out({out_n});
    for (std::size_t o = 0; o < out_n; ++o) {
        T acc = p.bias[o];
        const T* wrow = &p.weights.at(o, 0);
        for (std::size_t i = 0; i < in_n; ++i) acc += wrow[i] * input[i];
        out[o] = acc;
    }
    return {std::move(out), DenseCacheT<T>{input}};
}

template <typename T>
void dense_backward(const TensorT<T>& grad_out, const DenseCacheT<T>& cache,
                    const DenseParamsT<T>& p, TensorT<T>& grad_in,
                    TensorT<T>& grad_weights, TensorT<T>& grad_bias) {
    const std::size_t out_n = p.weights.extent(0), in_n = p.weights.extent(1);
    if (grad_out.size() != out_n || cache.input.size() != in_n)
        throw ShapeError("dense_backward: shapes do not match cached forward");
    grad_in = TensorT<T>({in_n});
    grad_weights = TensorT<T>(p.weights.shape());
    grad_bias = grad_out;
    for (std::size_t o = 0; o < out_n; ++o) {
        const T g = grad_out[o];
        const T* wrow = &p.weights.at(o, 0);
        T* gwrow = &grad_weights.at(o, 0);
        for (std::size_t i = 0; i < in_n; ++i) {
            grad_in[i] += wrow[i] * g;
            gwrow[i] = g * cache.input[i];
        }
    }
}

// Derivative at exactly 0 is 0.
template <typename T>
std::pair<TensorT<T>, ReluCacheT<T>> relu_forward(const TensorT<T>& input) {
    TensorT<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i)
        out[i] = input[i] > T(0) ? input[i] : T(0);
    return {std::move(out), ReluCacheT<T>{input}};
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const ReluCacheT<T>& cache) {
    if (!grad_out.same_shape(cache.input))
        throw ShapeError("relu_backward: grad_out shape does not match cached forward");
    TensorT<T> grad_in(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        grad_in[i] = cache.input[i] > T(0) ? grad_out[i] : T(0);
    return grad_in;
}

// Inverted dropout: survivors scaled by 1/(1-rate) at train time, so
// inference is a pure identity.
template <typename T>
std::pair<TensorT<T>, DropoutCache>
dropout_forward(const TensorT<T>& input, double rate, bool train, Prng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout: rate must be in [0,1)");
    DropoutCache cache;
    if (!train || rate == 0.0) {
        cache.keep.assign(input.size(), 1);
        cache.scale = 1.0f;
        return {input, std::move(cache)};
    }
    cache.keep.resize(input.size());
    cache.scale = static_cast<float>(1.0 / (1.0 - rate));
    TensorT<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const bool keep = rng.next_double() >= rate;
        cache.keep[i] = keep ? 1 : 0;
        out[i] = keep ? input[i] * static_cast<T>(cache.scale) : T(0);
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
TensorT<T> dropout_backward(const TensorT<T>& grad_out, const DropoutCache& cache) {
    if (grad_out.size() != cache.keep.size())
        throw ShapeError("dropout_backward: grad_out does not match cached mask");
    TensorT<T> grad_in(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        grad_in[i] = cache.keep[i] ? grad_out[i] * static_cast<T>(cache.scale) : T(0);
    return grad_in;
}

template <typename T>
struct SoftmaxXentResult {
    T loss;
    TensorT<T> grad_logits;
    TensorT<T> probs;
};

// Max-subtracted softmax with categorical cross-entropy.
template <typename T>
SoftmaxXentResult<T> softmax_xent(const TensorT<T>& logits, std::size_t true_class) {
    const std::size_t k = logits.size();
    if (true_class >= k)
        throw ConfigError("softmax_xent: class index out of range");
    T max_logit = logits[0];
    for (std::size_t i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);

    TensorT<T> probs(logits.shape());
    T denom = T(0);
    for (std::size_t i = 0; i < k; ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        denom += probs[i];
    }
    for (std::size_t i = 0; i < k; ++i) probs[i] /= denom;

    SoftmaxXentResult<T> r;
    r.loss = -std::log(probs[true_class]);
    r.grad_logits = probs;
    r.grad_logits[true_class] -= T(1);
    r.probs = std::move(probs);
    return r;
}

using ConvParams = ConvParamsT<float>;
using DenseParams = DenseParamsT<float>;

} // namespace mtcn

#endif
