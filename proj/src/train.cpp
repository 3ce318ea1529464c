#include "mtcn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "mtcn/image_ops.hpp"

namespace mtcn {

namespace {

struct Prepared {
    Tensor image;
    std::size_t class_index; // position within the model's output classes
};

// Class index for a model head: 3-class models use the label order
// directly; 2-class models must be paired with a 2-label dataset, where
// labels map to 0/1 by ascending class.
std::size_t class_index_for(Label label, std::size_t num_classes,
                            const std::vector<Label>& present) {
    if (num_classes == 3) return static_cast<std::size_t>(label);
    const auto it = std::find(present.begin(), present.end(), label);
    if (it == present.end()) throw DataError("sample label outside the model's class set");
    return static_cast<std::size_t>(it - present.begin());
}

std::vector<Label> present_labels(const std::vector<Sample>& samples) {
    std::vector<Label> out;
    for (const Sample& s : samples)
        if (std::find(out.begin(), out.end(), s.label) == out.end()) out.push_back(s.label);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Prepared> prepare(const std::vector<Sample>& samples, const ModelConfig& config,
                              bool apply_sharpen, const std::vector<Label>& present) {
    std::vector<Prepared> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        if (s.image.pixels.empty())
            throw DataError("training sample has no loaded image: " + s.path);
        GrayImage img = s.image;
        if (apply_sharpen && !s.sharpened) img = sharpen(img);
        img = resize_square(img, config.input_size);
        out.push_back({to_tensor(img), class_index_for(s.label, config.num_classes, present)});
    }
    return out;
}

void accumulate(GradientsT<float>& dst, const GradientsT<float>& src) {
    for (std::size_t i = 0; i < dst.convs.size(); ++i) {
        for (std::size_t j = 0; j < dst.convs[i].kernel.size(); ++j)
            dst.convs[i].kernel[j] += src.convs[i].kernel[j];
        for (std::size_t j = 0; j < dst.convs[i].bias.size(); ++j)
            dst.convs[i].bias[j] += src.convs[i].bias[j];
    }
    for (std::size_t i = 0; i < dst.denses.size(); ++i) {
        for (std::size_t j = 0; j < dst.denses[i].weights.size(); ++j)
            dst.denses[i].weights[j] += src.denses[i].weights[j];
        for (std::size_t j = 0; j < dst.denses[i].bias.size(); ++j)
            dst.denses[i].bias[j] += src.denses[i].bias[j];
    }
}

void scale(GradientsT<float>& g, float f) {
    for (auto& c : g.convs) {
        for (std::size_t j = 0; j < c.kernel.size(); ++j) c.kernel[j] *= f;
        for (std::size_t j = 0; j < c.bias.size(); ++j) c.bias[j] *= f;
    }
    for (auto& d : g.denses) {
        for (std::size_t j = 0; j < d.weights.size(); ++j) d.weights[j] *= f;
        for (std::size_t j = 0; j < d.bias.size(); ++j) d.bias[j] *= f;
    }
}

// Per-sample dropout stream: deterministic in (seed, epoch, sample slot)
// so batch-parallel execution reproduces the serial masks.
Prng dropout_stream(std::uint64_t seed, std::size_t epoch, std::size_t sample_ordinal) {
    const std::uint64_t mixed =
        seed ^ (0x9e3779b97f4a7c15ULL * (epoch + 1)) ^ (0xc2b2ae3d27d4eb4fULL * (sample_ordinal + 1));
    return Prng(mixed, Stream::Dropout);
}

double total_l2_penalty(const Model& model, const L2Config& l2) {
    double p = 0.0;
    for (const auto& c : model.convs) p += l2_penalty(c.kernel, l2);
    for (const auto& d : model.denses) p += l2_penalty(d.weights, l2);
    return p;
}

struct EvalPass {
    double mean_loss = 0.0;
    double accuracy_pct = 0.0;
};

EvalPass infer_pass(const Model& model, const std::vector<Prepared>& set) {
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const Prepared& s : set) {
        Tensor logits = model_forward(model, s.image, RunMode::Infer);
        auto r = softmax_xent(logits, s.class_index);
        loss_sum += r.loss;
        std::size_t best = 0;
        for (std::size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[best]) best = i;
        if (best == s.class_index) ++correct;
    }
    EvalPass out;
    out.mean_loss = loss_sum / static_cast<double>(set.size());
    out.accuracy_pct = 100.0 * static_cast<double>(correct) / static_cast<double>(set.size());
    return out;
}

} // namespace

std::string report_summary(const TrainReport& report) {
    std::ostringstream os;
    os << "best_epoch=" << report.best_epoch << "\n";
    os << "best_val_acc=" << report.best_val_acc << "\n";
    os << "stop_reason=" << report.stop_reason << "\n";
    os << "epochs=" << report.epochs.size() << "\n";
    os << "seed=" << report.seed << "\n";
    const TrainConfig& tc = report.train_config;
    os << "lr=" << tc.lr << "\n";
    os << "batch_size=" << tc.batch_size << "\n";
    os << "dropout_rate=" << tc.dropout_rate << "\n";
    os << "l2_lambda=" << tc.l2_lambda << "\n";
    os << "patience_epochs=" << tc.patience_epochs << "\n";
    os << "max_epochs=" << tc.max_epochs << "\n";
    os << "sharpen=" << (tc.sharpen ? 1 : 0) << "\n";
    os << "rotations=" << (tc.rotations ? 1 : 0) << "\n";
    os << "threads=" << tc.threads << "\n";
    std::istringstream cfg(encode_config(report.model_config));
    std::string line;
    while (std::getline(cfg, line)) os << "model." << line << "\n";
    return os.str();
}

std::pair<Model, TrainReport> train(const ModelConfig& config, const TrainConfig& tc,
                                    const std::vector<Sample>& train_set,
                                    const std::vector<Sample>& val_set) {
    if (train_set.empty()) throw ConfigError("train: empty training set");
    if (val_set.empty()) throw ConfigError("train: empty validation set");
    {
        // Train/val must not share groups.
        std::vector<Sample> all;
        all.reserve(train_set.size() + val_set.size());
        for (Sample s : train_set) { s.split = Split::Train; all.push_back(std::move(s)); }
        for (Sample s : val_set) { s.split = Split::Val; all.push_back(std::move(s)); }
        validate_samples(all);
    }

    const auto t_start = std::chrono::steady_clock::now();

    std::vector<Sample> train_samples = train_set;
    if (tc.rotations) train_samples = augment_rotations(train_samples);

    ModelConfig cfg = config;
    cfg.seed = tc.seed;
    cfg.trained_on_sharpened = tc.sharpen;

    const auto present = present_labels(train_samples);
    if (present.size() != cfg.num_classes)
        throw ConfigError("train: dataset has " + std::to_string(present.size()) +
                          " classes but the model head has " + std::to_string(cfg.num_classes));
    std::vector<Prepared> train_data = prepare(train_samples, cfg, tc.sharpen, present);
    std::vector<Prepared> val_data = prepare(val_set, cfg, tc.sharpen, present);

    Model model = build_model<float>(cfg);
    NadamConfig nadam{tc.lr};
    L2Config l2{tc.l2_lambda};

    std::vector<NadamStateT<float>> kernel_states, kbias_states, weight_states, dbias_states;
    for (const auto& c : model.convs) {
        kernel_states.emplace_back(c.kernel.shape());
        kbias_states.emplace_back(c.bias.shape());
    }
    for (const auto& d : model.denses) {
        weight_states.emplace_back(d.weights.shape());
        dbias_states.emplace_back(d.bias.shape());
    }
    std::uint64_t step = 0;

    Prng shuffle_rng(tc.seed, Stream::Shuffle);
    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    report.seed = tc.seed;
    report.train_config = tc;
    report.model_config = cfg;

    Model best_model = model;
    double best_val = -1.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_since_improve = 0;
    const int threads = std::max(1, tc.threads);

    for (std::size_t epoch = 0; epoch < tc.max_epochs; ++epoch) {
        shuffle(order, shuffle_rng);

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += tc.batch_size) {
            const std::size_t batch_end = std::min(batch_start + tc.batch_size, order.size());
            const std::size_t batch_n = batch_end - batch_start;

            GradientsT<float> grads = make_zero_grads(model);

            // Each sample's backward fills its own zeroed buffer; buffers
            // merge in strict sample-index order, so the sum is
            // bit-identical for every thread count. Threads only
            // parallelize the per-sample compute, one wave at a time.
            const std::size_t wave =
                std::min<std::size_t>(static_cast<std::size_t>(threads), batch_n);
            std::vector<GradientsT<float>> sample_grads;
            sample_grads.reserve(wave);
            for (std::size_t i = 0; i < wave; ++i) sample_grads.push_back(make_zero_grads(model));

            for (std::size_t wave_start = batch_start; wave_start < batch_end;
                 wave_start += wave) {
                const std::size_t n_active = std::min(wave, batch_end - wave_start);
                auto run_sample = [&](std::size_t slot) {
                    const std::size_t s = wave_start + slot;
                    const Prepared& sample = train_data[order[s]];
                    ForwardCachesT<float> caches;
                    Prng drop_rng = dropout_stream(tc.seed, epoch, s);
                    Tensor logits = model_forward(model, sample.image, RunMode::Train, &caches,
                                                  tc.dropout_rate, &drop_rng);
                    auto r = softmax_xent(logits, sample.class_index);
                    if (!std::isfinite(r.loss))
                        throw NumericError("train: loss diverged (non-finite) at epoch " +
                                           std::to_string(epoch));
                    model_backward(model, caches, r.grad_logits, sample_grads[slot]);
                };
                if (n_active == 1 || threads == 1) {
                    for (std::size_t slot = 0; slot < n_active; ++slot) run_sample(slot);
                } else {
                    std::vector<std::string> errors(n_active);
                    std::vector<std::thread> pool;
                    for (std::size_t slot = 0; slot < n_active; ++slot) {
                        pool.emplace_back([&, slot] {
                            try {
                                run_sample(slot);
                            } catch (const std::exception& e) {
                                errors[slot] = e.what();
                            }
                        });
                    }
                    for (auto& t : pool) t.join();
                    for (const std::string& e : errors)
                        if (!e.empty()) throw NumericError(e);
                }
                for (std::size_t slot = 0; slot < n_active; ++slot) {
                    accumulate(grads, sample_grads[slot]);
                    sample_grads[slot] = make_zero_grads(model);
                }
            }

            scale(grads, 1.0f / static_cast<float>(batch_n));
            for (std::size_t i = 0; i < model.convs.size(); ++i)
                l2_add_grad(model.convs[i].kernel, l2, grads.convs[i].kernel);
            for (std::size_t i = 0; i < model.denses.size(); ++i)
                l2_add_grad(model.denses[i].weights, l2, grads.denses[i].weights);

            ++step;
            for (std::size_t i = 0; i < model.convs.size(); ++i) {
                nadam_step(model.convs[i].kernel, grads.convs[i].kernel, kernel_states[i], step,
                           nadam, "conv" + std::to_string(i) + ".kernel");
                nadam_step(model.convs[i].bias, grads.convs[i].bias, kbias_states[i], step, nadam,
                           "conv" + std::to_string(i) + ".bias");
            }
            for (std::size_t i = 0; i < model.denses.size(); ++i) {
                nadam_step(model.denses[i].weights, grads.denses[i].weights, weight_states[i],
                           step, nadam, "dense" + std::to_string(i) + ".weights");
                nadam_step(model.denses[i].bias, grads.denses[i].bias, dbias_states[i], step,
                           nadam, "dense" + std::to_string(i) + ".bias");
            }
        }

        const EvalPass train_eval = infer_pass(model, train_data);
        const EvalPass val_eval = infer_pass(model, val_data);

        EpochStats stats;
        stats.train_loss = train_eval.mean_loss + total_l2_penalty(model, l2);
        stats.train_acc = train_eval.accuracy_pct;
        stats.val_acc = val_eval.accuracy_pct;
        report.epochs.push_back(stats);

        if (val_eval.accuracy_pct > best_val) {
            best_val = val_eval.accuracy_pct;
            best_epoch = epoch;
            best_model = model;
            epochs_since_improve = 0;
        } else {
            ++epochs_since_improve;
            if (epochs_since_improve >= tc.patience_epochs) {
                report.stop_reason = "no improvement for " + std::to_string(tc.patience_epochs) +
                                     " epochs";
                break;
            }
        }
    }
    if (report.stop_reason.empty()) report.stop_reason = "max_epochs reached";

    report.best_epoch = best_epoch;
    report.best_val_acc = best_val;
    report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(best_model), std::move(report)};
}

CvResult cross_validate(const ModelConfig& config, const TrainConfig& tc,
                        const std::vector<Sample>& dataset, std::size_t k) {
    const auto folds = kfold(dataset, k, tc.seed);
    CvResult result;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<Sample> fold_train, fold_val;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t idx : folds[i])
                (i == f ? fold_val : fold_train).push_back(dataset[idx]);
        TrainConfig fold_tc = tc;
        fold_tc.seed = tc.seed ^ (0x9e3779b97f4a7c15ULL * (f + 1));
        auto [model, report] = train(config, fold_tc, fold_train, fold_val);
        result.fold_accuracies.push_back(report.best_val_acc);
    }
    result.mean_accuracy =
        std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
        static_cast<double>(k);
    return result;
}

ModelConfig sample_config(const SearchSpace& space, std::size_t num_classes, Prng& rng) {
    constexpr int kRejectionLimit = 1000;
    for (int attempt = 0; attempt < kRejectionLimit; ++attempt) {
        ModelConfig cfg;
        cfg.num_classes = num_classes;
        cfg.input_size = space.input_min + rng.next_below(space.input_max - space.input_min + 1);
        const std::size_t n_conv =
            space.conv_layers_min +
            rng.next_below(space.conv_layers_max - space.conv_layers_min + 1);
        const bool use_pool =
            space.force_maxpool || (space.allow_maxpool && rng.next_below(2) == 1);
        // Structured progression: the ranges bound the first conv layer,
        // later layers grow filters 4x and kernels by 1; one shared FC
        // width. Pinning every range to the base-topology values
        // reproduces it exactly.
        const std::size_t base_filters =
            space.filters_min + rng.next_below(space.filters_max - space.filters_min + 1);
        const std::size_t base_kernel =
            space.kernel_min + rng.next_below(space.kernel_max - space.kernel_min + 1);
        std::size_t filters = base_filters;
        std::size_t kernel = base_kernel;
        for (std::size_t i = 0; i < n_conv; ++i) {
            cfg.layers.push_back(LayerSpec::conv(filters, kernel, 1));
            if (use_pool) cfg.layers.push_back(LayerSpec::maxpool(2, 2));
            filters *= 4;
            kernel += 1;
        }
        cfg.layers.push_back(LayerSpec::flatten());
        const std::size_t n_fc =
            space.fc_layers_min + rng.next_below(space.fc_layers_max - space.fc_layers_min + 1);
        const std::size_t fc_units =
            space.fc_size_min + rng.next_below(space.fc_size_max - space.fc_size_min + 1);
        for (std::size_t i = 0; i < n_fc; ++i)
            cfg.layers.push_back(LayerSpec::dense(fc_units));
        cfg.layers.push_back(LayerSpec::dense(num_classes));
        try {
            validate_config(cfg);
            // The filter progression is unbounded above, so cap total
            // size; anything past this would not be trainable anyway.
            constexpr std::size_t kMaxParams = 50'000'000;
            if (param_count(cfg) > kMaxParams) continue;
            return cfg;
        } catch (const std::exception&) {
            continue; // shape-invalid chain, resample
        }
    }
    throw ConfigError("sample_config: no shape-valid topology found within rejection limit");
}

std::vector<SearchResult> topology_search(const SearchSpace& space, const TrainConfig& tc,
                                          const std::vector<Sample>& dataset,
                                          std::size_t budget, std::uint64_t seed,
                                          std::size_t num_classes, std::size_t k) {
    if (budget < 1) throw ConfigError("topology_search: budget must be >= 1");
    Prng rng(seed, Stream::Search);
    std::vector<SearchResult> results;
    for (std::size_t i = 0; i < budget; ++i) {
        SearchResult r;
        r.config = sample_config(space, num_classes, rng);
        r.config.seed = tc.seed;
        r.cv_accuracy = cross_validate(r.config, tc, dataset, k).mean_accuracy;
        results.push_back(std::move(r));
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const SearchResult& a, const SearchResult& b) {
                         if (a.cv_accuracy != b.cv_accuracy) return a.cv_accuracy > b.cv_accuracy;
                         return param_count(a.config) < param_count(b.config);
                     });
    return results;
}

} // namespace mtcn
