#include "mtcn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <tuple>

namespace mtcn {

ModelConfig canonical_config(std::size_t num_classes) {
    if (num_classes != 2 && num_classes != 3)
        throw ConfigError("canonical_config: num_classes must be 2 or 3");
    ModelConfig c;
    c.input_size = 300;
    c.num_classes = num_classes;
    c.layers = {
        LayerSpec::conv(16, 2, 1), LayerSpec::maxpool(2, 2),
        LayerSpec::conv(64, 3, 1), LayerSpec::maxpool(2, 2),
        LayerSpec::flatten(),
        LayerSpec::dense(32),      LayerSpec::dense(32),
        LayerSpec::dense(num_classes),
    };
    return c;
}

ShapeChain validate_config(const ModelConfig& config) {
    if (config.num_classes != 2 && config.num_classes != 3)
        throw ConfigError("config: num_classes must be 2 or 3");
    if (config.input_size < 1) throw ConfigError("config: input_size must be positive");
    if (config.layers.empty()) throw ConfigError("config: no layers");
    if (config.layers.back().kind != LayerKind::Dense ||
        config.layers.back().units != config.num_classes)
        throw ConfigError("config: last layer must be dense(num_classes)");

    ShapeChain chain;
    std::size_t h = config.input_size, w = config.input_size, c = 1;
    bool flattened = false;
    std::size_t vec = 0;

    for (const LayerSpec& l : config.layers) {
        switch (l.kind) {
        case LayerKind::Conv:
            if (flattened) throw ConfigError("config: conv layer after flatten");
            if (l.filters < 1 || l.kernel_h < 1 || l.kernel_w < 1 || l.stride_h < 1 ||
                l.stride_w < 1)
                throw ConfigError("config: invalid conv parameters");
            if (h < l.kernel_h || w < l.kernel_w)
                throw ShapeError("config: conv kernel exceeds spatial extent");
            h = conv_out_extent(h, l.kernel_h, l.stride_h);
            w = conv_out_extent(w, l.kernel_w, l.stride_w);
            c = l.filters;
            chain.stages.push_back({h, w, c});
            break;
        case LayerKind::MaxPool:
            if (flattened) throw ConfigError("config: pool layer after flatten");
            if (l.window_h < 1 || l.window_w < 1 || l.stride_h < 1 || l.stride_w < 1)
                throw ConfigError("config: invalid pool parameters");
            if (h < l.window_h || w < l.window_w)
                throw ShapeError("config: pool window exceeds spatial extent");
            h = conv_out_extent(h, l.window_h, l.stride_h);
            w = conv_out_extent(w, l.window_w, l.stride_w);
            chain.stages.push_back({h, w, c});
            break;
        case LayerKind::Flatten:
            if (flattened) throw ConfigError("config: duplicate flatten");
            flattened = true;
            vec = h * w * c;
            if (vec < 1) throw ShapeError("config: flatten size shrank below 1");
            chain.flatten_size = vec;
            break;
        case LayerKind::Dense:
            if (!flattened) throw ConfigError("config: dense layer before flatten");
            if (l.units < 1) throw ConfigError("config: dense units must be >= 1");
            vec = l.units;
            break;
        }
    }
    if (!flattened) throw ConfigError("config: missing flatten layer");
    return chain;
}

std::size_t param_count(const ModelConfig& config) {
    ShapeChain chain = validate_config(config);
    std::size_t total = 0;
    std::size_t c = 1;
    std::size_t vec = 0;
    bool flattened = false;
    std::size_t stage = 0;
    for (const LayerSpec& l : config.layers) {
        switch (l.kind) {
        case LayerKind::Conv:
            total += l.filters * l.kernel_h * l.kernel_w * c + l.filters;
            c = l.filters;
            ++stage;
            break;
        case LayerKind::MaxPool:
            ++stage;
            break;
        case LayerKind::Flatten:
            flattened = true;
            vec = chain.flatten_size;
            break;
        case LayerKind::Dense:
            total += l.units * vec + l.units;
            vec = l.units;
            break;
        }
    }
    (void)flattened;
    return total;
}

namespace {

const char* kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    }
    return "?";
}

} // namespace

std::string encode_config(const ModelConfig& config) {
    std::ostringstream os;
    os << "input_size=" << config.input_size << "\n";
    os << "num_classes=" << config.num_classes << "\n";
    os << "seed=" << config.seed << "\n";
    os << "sharpened=" << (config.trained_on_sharpened ? 1 : 0) << "\n";
    for (const LayerSpec& l : config.layers) {
        os << "layer=" << kind_name(l.kind);
        switch (l.kind) {
        case LayerKind::Conv:
            os << " filters=" << l.filters << " kernel=" << l.kernel_h << "x" << l.kernel_w
               << " stride=" << l.stride_h << "x" << l.stride_w;
            break;
        case LayerKind::MaxPool:
            os << " window=" << l.window_h << "x" << l.window_w << " stride=" << l.stride_h
               << "x" << l.stride_w;
            break;
        case LayerKind::Flatten:
            break;
        case LayerKind::Dense:
            os << " units=" << l.units;
            break;
        }
        os << "\n";
    }
    return os.str();
}

namespace {

std::pair<std::size_t, std::size_t> parse_pair(const std::string& v, const std::string& ctx) {
    auto x = v.find('x');
    if (x == std::string::npos) throw ParseError("config: expected AxB in " + ctx);
    try {
        return {std::stoul(v.substr(0, x)), std::stoul(v.substr(x + 1))};
    } catch (const std::exception&) {
        throw ParseError("config: bad pair value '" + v + "' in " + ctx);
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        std::uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw ParseError("");
        return r;
    } catch (const std::exception&) {
        throw ParseError("config: bad integer '" + v + "' in " + ctx);
    }
}

} // namespace

ModelConfig decode_config(const std::string& text) {
    ModelConfig c;
    c.layers.clear();
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config: missing '=' in line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "input_size") {
            c.input_size = parse_u64(val, key);
        } else if (key == "num_classes") {
            c.num_classes = parse_u64(val, key);
        } else if (key == "seed") {
            c.seed = parse_u64(val, key);
        } else if (key == "sharpened") {
            c.trained_on_sharpened = parse_u64(val, key) != 0;
        } else if (key == "layer") {
            std::istringstream ls(val);
            std::string kind;
            ls >> kind;
            LayerSpec l;
            if (kind == "conv") l.kind = LayerKind::Conv;
            else if (kind == "maxpool") l.kind = LayerKind::MaxPool;
            else if (kind == "flatten") l.kind = LayerKind::Flatten;
            else if (kind == "dense") l.kind = LayerKind::Dense;
            else throw ParseError("config: unknown layer kind '" + kind + "'");
            std::string tok;
            while (ls >> tok) {
                auto teq = tok.find('=');
                if (teq == std::string::npos)
                    throw ParseError("config: bad layer attribute '" + tok + "'");
                const std::string k = tok.substr(0, teq);
                const std::string v = tok.substr(teq + 1);
                if (k == "filters") l.filters = parse_u64(v, k);
                else if (k == "units") l.units = parse_u64(v, k);
                else if (k == "kernel") std::tie(l.kernel_h, l.kernel_w) = parse_pair(v, k);
                else if (k == "window") std::tie(l.window_h, l.window_w) = parse_pair(v, k);
                else if (k == "stride") std::tie(l.stride_h, l.stride_w) = parse_pair(v, k);
                else throw ParseError("config: unknown layer attribute '" + k + "'");
            }
            c.layers.push_back(l);
        } else {
            throw ParseError("config: unknown key '" + key + "'");
        }
    }
    return c;
}

template <typename T>
ModelT<T> build_model(const ModelConfig& config) {
    validate_config(config);
    ModelT<T> model;
    model.config = config;
    Prng rng(config.seed, Stream::Init);

    std::size_t c = 1;
    std::size_t vec = 0;
    std::size_t h = config.input_size, w = config.input_size;

    for (const LayerSpec& l : config.layers) {
        switch (l.kind) {
        case LayerKind::Conv: {
            ConvParamsT<T> p;
            p.kernel = TensorT<T>({l.filters, l.kernel_h, l.kernel_w, c});
            p.bias = TensorT<T>({l.filters});
            p.stride_h = l.stride_h;
            p.stride_w = l.stride_w;
            const double fan_in = static_cast<double>(l.kernel_h * l.kernel_w * c);
            const double fan_out = static_cast<double>(l.kernel_h * l.kernel_w * l.filters);
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (std::size_t i = 0; i < p.kernel.size(); ++i)
                p.kernel[i] = static_cast<T>(rng.uniform(-bound, bound));
            model.convs.push_back(std::move(p));
            h = conv_out_extent(h, l.kernel_h, l.stride_h);
            w = conv_out_extent(w, l.kernel_w, l.stride_w);
            c = l.filters;
            break;
        }
        case LayerKind::MaxPool:
            h = conv_out_extent(h, l.window_h, l.stride_h);
            w = conv_out_extent(w, l.window_w, l.stride_w);
            break;
        case LayerKind::Flatten:
            vec = h * w * c;
            break;
        case LayerKind::Dense: {
            DenseParamsT<T> p;
            p.weights = TensorT<T>({l.units, vec});
            p.bias = TensorT<T>({l.units});
            const double bound = std::sqrt(6.0 / static_cast<double>(vec + l.units));
            for (std::size_t i = 0; i < p.weights.size(); ++i)
                p.weights[i] = static_cast<T>(rng.uniform(-bound, bound));
            model.denses.push_back(std::move(p));
            vec = l.units;
            break;
        }
        }
    }
    return model;
}

template <typename T>
TensorT<T> model_forward(const ModelT<T>& model, const TensorT<T>& image, RunMode mode,
                         ForwardCachesT<T>* caches, double dropout_rate, Prng* rng) {
    const auto& cfg = model.config;
    if (image.rank() != 3 || image.extent(0) != cfg.input_size ||
        image.extent(1) != cfg.input_size || image.extent(2) != 1)
        throw ShapeError("forward: expected " + std::to_string(cfg.input_size) + "x" +
                         std::to_string(cfg.input_size) + "x1 image, got " + image.shape_str());
    const bool train = mode == RunMode::Train;
    if (train && caches == nullptr)
        throw ConfigError("forward: train mode requires caches");
    if (train && dropout_rate > 0.0 && rng == nullptr)
        throw ConfigError("forward: dropout requires an rng in train mode");

    TensorT<T> x = image;
    std::size_t conv_i = 0, dense_i = 0;
    const std::size_t n_dense = model.denses.size();

    for (const LayerSpec& l : cfg.layers) {
        switch (l.kind) {
        case LayerKind::Conv: {
            auto [out, cache] = conv2d_forward(x, model.convs[conv_i]);
            auto [act, rcache] = relu_forward(out);
            x = std::move(act);
            if (train) {
                caches->conv.push_back(std::move(cache));
                caches->relu.push_back(std::move(rcache));
            }
            ++conv_i;
            break;
        }
        case LayerKind::MaxPool: {
            PoolParams p{l.window_h, l.window_w, l.stride_h, l.stride_w};
            auto [out, cache] = maxpool_forward(x, p);
            x = std::move(out);
            if (train) caches->pool.push_back(std::move(cache));
            break;
        }
        case LayerKind::Flatten:
            x = TensorT<T>::from_data({x.size()}, std::vector<T>(x.data(), x.data() + x.size()));
            break;
        case LayerKind::Dense: {
            auto [out, cache] = dense_forward(x, model.denses[dense_i]);
            const bool hidden = dense_i + 1 < n_dense;
            if (hidden) {
                auto [act, rcache] = relu_forward(out);
                if (train) {
                    auto [dropped, dcache] = dropout_forward(act, dropout_rate, true, *rng);
                    x = std::move(dropped);
                    caches->relu.push_back(std::move(rcache));
                    caches->drop.push_back(std::move(dcache));
                } else {
                    x = std::move(act);
                }
            } else {
                x = std::move(out);
            }
            if (train) caches->dense.push_back(std::move(cache));
            ++dense_i;
            break;
        }
        }
    }
    return x;
}

template <typename T>
GradientsT<T> make_zero_grads(const ModelT<T>& model) {
    GradientsT<T> g;
    for (const auto& c : model.convs)
        g.convs.push_back({TensorT<T>(c.kernel.shape()), TensorT<T>(c.bias.shape())});
    for (const auto& d : model.denses)
        g.denses.push_back({TensorT<T>(d.weights.shape()), TensorT<T>(d.bias.shape())});
    return g;
}

template <typename T>
void add_scaled(TensorT<T>& dst, const TensorT<T>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
void model_backward(const ModelT<T>& model, const ForwardCachesT<T>& caches,
                    const TensorT<T>& grad_logits, GradientsT<T>& grads) {
    const auto& cfg = model.config;
    std::size_t conv_i = model.convs.size();
    std::size_t dense_i = model.denses.size();
    std::size_t pool_i = caches.pool.size();
    std::size_t relu_i = caches.relu.size();
    std::size_t drop_i = caches.drop.size();

    TensorT<T> g = grad_logits;
    const std::size_t n_dense = model.denses.size();

    for (auto it = cfg.layers.rbegin(); it != cfg.layers.rend(); ++it) {
        const LayerSpec& l = *it;
        switch (l.kind) {
        case LayerKind::Dense: {
            --dense_i;
            const bool hidden = dense_i + 1 < n_dense;
            if (hidden) {
                g = dropout_backward(g, caches.drop[--drop_i]);
                g = relu_backward(g, caches.relu[--relu_i]);
            }
            TensorT<T> gin, gw, gb;
            dense_backward(g, caches.dense[dense_i], model.denses[dense_i], gin, gw, gb);
            add_scaled(grads.denses[dense_i].weights, gw);
            add_scaled(grads.denses[dense_i].bias, gb);
            g = std::move(gin);
            break;
        }
        case LayerKind::Flatten: {
            // Undo the reshape: recompute the spatial shape feeding the flatten.
            std::size_t h = cfg.input_size, w = cfg.input_size, c = 1;
            for (const LayerSpec& s : cfg.layers) {
                if (s.kind == LayerKind::Conv) {
                    h = conv_out_extent(h, s.kernel_h, s.stride_h);
                    w = conv_out_extent(w, s.kernel_w, s.stride_w);
                    c = s.filters;
                } else if (s.kind == LayerKind::MaxPool) {
                    h = conv_out_extent(h, s.window_h, s.stride_h);
                    w = conv_out_extent(w, s.window_w, s.stride_w);
                } else if (s.kind == LayerKind::Flatten) {
                    break;
                }
            }
            g = TensorT<T>::from_data({h, w, c}, std::vector<T>(g.data(), g.data() + g.size()));
            break;
        }
        case LayerKind::MaxPool:
            g = maxpool_backward(g, caches.pool[--pool_i]);
            break;
        case LayerKind::Conv: {
            --conv_i;
            g = relu_backward(g, caches.relu[--relu_i]);
            TensorT<T> gin, gk, gb;
            conv2d_backward(g, caches.conv[conv_i], model.convs[conv_i], gin, gk, gb);
            add_scaled(grads.convs[conv_i].kernel, gk);
            add_scaled(grads.convs[conv_i].bias, gb);
            g = std::move(gin);
            break;
        }
        }
    }
}

template ModelT<float> build_model<float>(const ModelConfig&);
template ModelT<double> build_model<double>(const ModelConfig&);
template TensorT<float> model_forward<float>(const ModelT<float>&, const TensorT<float>&, RunMode,
                                             ForwardCachesT<float>*, double, Prng*);
template TensorT<double> model_forward<double>(const ModelT<double>&, const TensorT<double>&,
                                               RunMode, ForwardCachesT<double>*, double, Prng*);
template void model_backward<float>(const ModelT<float>&, const ForwardCachesT<float>&,
                                    const TensorT<float>&, GradientsT<float>&);
template void model_backward<double>(const ModelT<double>&, const ForwardCachesT<double>&,
                                     const TensorT<double>&, GradientsT<double>&);
template GradientsT<float> make_zero_grads<float>(const ModelT<float>&);
template GradientsT<double> make_zero_grads<double>(const ModelT<double>&);

} // namespace mtcn
