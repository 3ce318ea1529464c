#ifndef MTCN_MODEL_HPP
#define MTCN_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtcn/layers.hpp"
#include "mtcn/optimizer.hpp"
#include "mtcn/prng.hpp"
#include "mtcn/tensor.hpp"

namespace mtcn {

enum class LayerKind { Conv, MaxPool, Flatten, Dense };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    // Conv
    std::size_t filters = 0;
    std::size_t kernel_h = 0, kernel_w = 0;
    std::size_t stride_h = 1, stride_w = 1;
    // MaxPool
    std::size_t window_h = 0, window_w = 0;
    // Dense
    std::size_t units = 0;

    static LayerSpec conv(std::size_t filters, std::size_t k, std::size_t s = 1) {
        LayerSpec l;
        l.kind = LayerKind::Conv;
        l.filters = filters;
        l.kernel_h = l.kernel_w = k;
        l.stride_h = l.stride_w = s;
        return l;
    }
    static LayerSpec maxpool(std::size_t w, std::size_t s) {
        LayerSpec l;
        l.kind = LayerKind::MaxPool;
        l.window_h = l.window_w = w;
        l.stride_h = l.stride_w = s;
        return l;
    }
    static LayerSpec flatten() {
        LayerSpec l;
        l.kind = LayerKind::Flatten;
        return l;
    }
    static LayerSpec dense(std::size_t units) {
        LayerSpec l;
        l.kind = LayerKind::Dense;
        l.units = units;
        return l;
    }

    bool operator==(const LayerSpec&) const = default;
};

// Declarative topology. ReLU follows every conv layer and every hidden
// dense layer; dropout follows every hidden dense layer at train time.
// The last layer must be a dense layer with num_classes units feeding
// the softmax head.
struct ModelConfig {
    std::size_t input_size = 300; // square grayscale input, pixels per side
    std::size_t num_classes = 3;
    std::uint64_t seed = 0;
    bool trained_on_sharpened = false; // preprocessing flag carried in the model file
    std::vector<LayerSpec> layers;

    bool operator==(const ModelConfig&) const = default;
};

// The best-topology network: 300px input, conv(16, 2x2, stride 1),
// pool(2x2, stride 2), conv(64, 3x3, stride 1), pool(2x2, stride 2),
// flatten, dense(32), dense(32), dense(num_classes) + softmax head.
ModelConfig canonical_config(std::size_t num_classes);

// Spatial shape after each conv/pool stage plus the flatten size.
struct ShapeChain {
    std::vector<std::array<std::size_t, 3>> stages; // [H, W, C] after each conv/pool layer
    std::size_t flatten_size = 0;
};

// Validates the full chain (throws ShapeError/ConfigError on an
// inadmissible topology) and returns the derived shapes.
ShapeChain validate_config(const ModelConfig& config);

std::size_t param_count(const ModelConfig& config);

// Canonical textual encoding used in the model file header and config
// files; round-trips exactly.
std::string encode_config(const ModelConfig& config);
ModelConfig decode_config(const std::string& text);

template <typename T>
struct ModelT {
    ModelConfig config;
    std::vector<ConvParamsT<T>> convs;   // one per conv layer, in layer order
    std::vector<DenseParamsT<T>> denses; // one per dense layer, in layer order

    std::size_t built_param_count() const {
        std::size_t n = 0;
        for (const auto& c : convs) n += c.kernel.size() + c.bias.size();
        for (const auto& d : denses) n += d.weights.size() + d.bias.size();
        return n;
    }
};

using Model = ModelT<float>;

// Per-layer forward caches, in execution order.
template <typename T>
struct ForwardCachesT {
    std::vector<ConvCacheT<T>> conv;
    std::vector<PoolCache> pool;
    std::vector<DenseCacheT<T>> dense;
    std::vector<ReluCacheT<T>> relu;
    std::vector<DropoutCache> drop;
};

// Gradients mirroring the model's parameter tensors.
template <typename T>
struct GradientsT {
    struct ConvGrads {
        TensorT<T> kernel, bias;
    };
    struct DenseGrads {
        TensorT<T> weights, bias;
    };
    std::vector<ConvGrads> convs;
    std::vector<DenseGrads> denses;
};

enum class RunMode { Train, Infer };

// Glorot-uniform weights from the seed's init substream, zero biases.
template <typename T>
ModelT<T> build_model(const ModelConfig& config);

// Runs the topology on one image. In Train mode caches are filled and
// dropout is active (rate > 0 requires rng).
template <typename T>
TensorT<T> model_forward(const ModelT<T>& model, const TensorT<T>& image, RunMode mode,
                         ForwardCachesT<T>* caches = nullptr, double dropout_rate = 0.0,
                         Prng* rng = nullptr);

// Backward pass through the cached forward; grad_logits comes from
// softmax_xent. Accumulates into grads (which must be zero-initialized
// or hold a previous sample's sums).
template <typename T>
void model_backward(const ModelT<T>& model, const ForwardCachesT<T>& caches,
                    const TensorT<T>& grad_logits, GradientsT<T>& grads);

template <typename T>
GradientsT<T> make_zero_grads(const ModelT<T>& model);

// Model file ("MTCN" format): magic + version + length-prefixed config
// text + named little-endian float32 tensor blobs + trailing CRC-32.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

extern template ModelT<float> build_model<float>(const ModelConfig&);
extern template ModelT<double> build_model<double>(const ModelConfig&);
extern template TensorT<float> model_forward<float>(const ModelT<float>&, const TensorT<float>&,
                                                    RunMode, ForwardCachesT<float>*, double, Prng*);
extern template TensorT<double> model_forward<double>(const ModelT<double>&, const TensorT<double>&,
                                                      RunMode, ForwardCachesT<double>*, double, Prng*);
extern template void model_backward<float>(const ModelT<float>&, const ForwardCachesT<float>&,
                                           const TensorT<float>&, GradientsT<float>&);
extern template void model_backward<double>(const ModelT<double>&, const ForwardCachesT<double>&,
                                            const TensorT<double>&, GradientsT<double>&);
extern template GradientsT<float> make_zero_grads<float>(const ModelT<float>&);
extern template GradientsT<double> make_zero_grads<double>(const ModelT<double>&);

} // namespace mtcn

#endif
