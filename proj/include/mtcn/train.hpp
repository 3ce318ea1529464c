#ifndef MTCN_TRAIN_HPP
#define MTCN_TRAIN_HPP

#include <string>
#include <vector>

#include "mtcn/dataset.hpp"
#include "mtcn/model.hpp"

namespace mtcn {

// Defaults are the published training hyperparameters.
struct TrainConfig {
    double lr = 0.002;
    std::size_t batch_size = 32;
    double dropout_rate = 0.5;
    double l2_lambda = 0.01;
    std::size_t patience_epochs = 2;
    std::size_t max_epochs = 100;
    std::uint64_t seed = 0;
    bool sharpen = false;
    bool rotations = false;
    int threads = 1;
};

struct EpochStats {
    double train_loss = 0.0; // mean data loss + L2 penalty at epoch end
    double train_acc = 0.0;  // percent
    double val_acc = 0.0;    // percent
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0; // 0-based index of the best validation epoch
    double best_val_acc = 0.0;
    std::string stop_reason;
    double wall_time_sec = 0.0;
    std::uint64_t seed = 0;
    TrainConfig train_config;
    ModelConfig model_config;
};

// Machine-readable key=value summary (best_epoch=, best_val_acc=,
// stop_reason=, config echo).
std::string report_summary(const TrainReport& report);

// Mini-batch training with patience-based early stopping on validation
// accuracy (strict improvement); returns the weights of the best epoch.
std::pair<Model, TrainReport> train(const ModelConfig& config, const TrainConfig& tc,
                                    const std::vector<Sample>& train_set,
                                    const std::vector<Sample>& val_set);

struct CvResult {
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracies;
};

// k-fold cross-validation: each fold in turn serves as the validation
// and early-stopping monitor for a model trained on the rest.
CvResult cross_validate(const ModelConfig& config, const TrainConfig& tc,
                        const std::vector<Sample>& dataset, std::size_t k = 10);

// Topology search ranges.
struct SearchSpace {
    std::size_t conv_layers_min = 1, conv_layers_max = 5;
    std::size_t filters_min = 8, filters_max = 256;
    std::size_t kernel_min = 2, kernel_max = 5;
    std::size_t fc_layers_min = 1, fc_layers_max = 4;
    std::size_t fc_size_min = 16, fc_size_max = 512;
    std::size_t input_min = 100, input_max = 300;
    bool allow_maxpool = true;
    bool force_maxpool = false;
};

struct SearchResult {
    ModelConfig config;
    double cv_accuracy = 0.0;
};

// Samples a config uniformly from the space; throws ConfigError if no
// shape-valid chain is found within the rejection limit.
ModelConfig sample_config(const SearchSpace& space, std::size_t num_classes, Prng& rng);

// Uniform random search: `budget` valid configs, each scored by
// cross-validation, ranked by accuracy (ties to fewer parameters).
std::vector<SearchResult> topology_search(const SearchSpace& space, const TrainConfig& tc,
                                          const std::vector<Sample>& dataset,
                                          std::size_t budget, std::uint64_t seed,
                                          std::size_t num_classes, std::size_t k = 10);

} // namespace mtcn

#endif
