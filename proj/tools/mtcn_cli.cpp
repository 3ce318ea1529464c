// mtcn: command-line entry point for the full pipeline.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "mtcn/dataset.hpp"
#include "mtcn/eval.hpp"
#include "mtcn/image_ops.hpp"
#include "mtcn/model.hpp"
#include "mtcn/pgm.hpp"
#include "mtcn/synth.hpp"
#include "mtcn/train.hpp"

namespace fs = std::filesystem;
using namespace mtcn;

namespace {

constexpr const char* kFormatVersion = "manifest=1 model=1";

// ---------------------------------------------------------------------
// key=value config file. Unknown keys are rejected; flags override.

struct FileConfig {
    std::map<std::string, std::string> values;
    bool has(const std::string& k) const { return values.count(k) != 0; }
};

const std::vector<std::string> kKnownKeys = {
    "lr",       "batch_size", "dropout_rate", "l2_lambda", "patience_epochs",
    "max_epochs", "seed",     "sharpen",      "rotations", "threads",
};

FileConfig load_file_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    FileConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(first, eq - first);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t' || value.back() == '\r'))
            value.pop_back();
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
            throw ParseError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        cfg.values[key] = value;
    }
    return cfg;
}

template <typename T>
T parse_value(const FileConfig& cfg, const std::string& key, T fallback) {
    if (!cfg.has(key)) return fallback;
    const std::string& raw = cfg.values.at(key);
    std::istringstream is(raw);
    T v{};
    if (!(is >> v) || !((is >> std::ws).eof()))
        throw ParseError("config key '" + key + "': malformed value '" + raw + "'");
    return v;
}

bool parse_bool(const FileConfig& cfg, const std::string& key, bool fallback) {
    if (!cfg.has(key)) return fallback;
    const std::string& raw = cfg.values.at(key);
    if (raw == "1" || raw == "true") return true;
    if (raw == "0" || raw == "false") return false;
    throw ParseError("config key '" + key + "': malformed value '" + raw + "'");
}

// Shared flags. Concrete values resolve as flag > config file > default.
struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    bool threads_set = false;
};

struct TrainFlags {
    double lr = -1.0;
    long batch_size = -1;
    double dropout_rate = -1.0;
    double l2_lambda = -1.0;
    long patience = -1;
    long max_epochs = -1;
    bool sharpen = false;
    bool rotations = false;
};

TrainConfig resolve_train_config(const GlobalOpts& g, const TrainFlags& f) {
    FileConfig file;
    if (!g.config_path.empty()) file = load_file_config(g.config_path);
    TrainConfig tc; // defaults are the published hyperparameters
    tc.lr = f.lr >= 0 ? f.lr : parse_value(file, "lr", tc.lr);
    tc.batch_size = f.batch_size >= 0 ? static_cast<std::size_t>(f.batch_size)
                                      : parse_value<std::size_t>(file, "batch_size", tc.batch_size);
    tc.dropout_rate =
        f.dropout_rate >= 0 ? f.dropout_rate : parse_value(file, "dropout_rate", tc.dropout_rate);
    tc.l2_lambda = f.l2_lambda >= 0 ? f.l2_lambda : parse_value(file, "l2_lambda", tc.l2_lambda);
    tc.patience_epochs = f.patience >= 0
                             ? static_cast<std::size_t>(f.patience)
                             : parse_value<std::size_t>(file, "patience_epochs", tc.patience_epochs);
    tc.max_epochs = f.max_epochs >= 0 ? static_cast<std::size_t>(f.max_epochs)
                                      : parse_value<std::size_t>(file, "max_epochs", tc.max_epochs);
    tc.seed = g.seed_set ? g.seed : parse_value<std::uint64_t>(file, "seed", 0);
    tc.sharpen = f.sharpen || parse_bool(file, "sharpen", false);
    tc.rotations = f.rotations || parse_bool(file, "rotations", false);
    tc.threads = g.threads_set ? g.threads : parse_value(file, "threads", 1);
    return tc;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

// Every run drops a reproducibility stanza next to its artifacts.
void write_stanza(const std::string& out_dir, const std::string& command, std::uint64_t seed,
                  const std::string& config_echo) {
    ensure_out_dir(out_dir);
    std::ofstream f(fs::path(out_dir) / (command + ".run"));
    f << "command=" << command << "\n";
    f << "seed=" << seed << "\n";
    f << "formats=" << kFormatVersion << "\n";
    std::istringstream echo(config_echo);
    std::string line;
    while (std::getline(echo, line))
        if (!line.empty()) f << "config." << line << "\n";
}

std::string train_config_echo(const TrainConfig& tc) {
    std::ostringstream os;
    os << "lr=" << tc.lr << "\nbatch_size=" << tc.batch_size << "\ndropout_rate="
       << tc.dropout_rate << "\nl2_lambda=" << tc.l2_lambda << "\npatience_epochs="
       << tc.patience_epochs << "\nmax_epochs=" << tc.max_epochs << "\nsharpen=" << tc.sharpen
       << "\nrotations=" << tc.rotations << "\nthreads=" << tc.threads << "\n";
    return os.str();
}

ModelConfig resolve_model_config(const std::string& model_config_path, std::size_t num_classes,
                                 std::size_t input_size) {
    ModelConfig cfg;
    if (model_config_path.empty()) {
        cfg = canonical_config(num_classes);
        if (input_size != 0) cfg.input_size = input_size;
    } else {
        std::ifstream f(model_config_path);
        if (!f) throw IoError("cannot open model config: " + model_config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        cfg = decode_config(ss.str());
    }
    validate_config(cfg);
    return cfg;
}

std::vector<Sample> load_with_images(const std::string& manifest) {
    std::vector<Sample> samples = load_manifest(manifest);
    for (Sample& s : samples) {
        std::string path = s.path;
        // Rotated copies reference the original file; rotation is applied
        // in memory unless the rotated file exists on disk.
        if (s.rotation != 0 && !fs::exists(path)) {
            path = rotated_path(s.path, 0);
            GrayImage img = load_pgm(path);
            if (img.is_16bit()) img = to_8bit(img);
            s.image = rotate90(img, s.rotation / 90);
            continue;
        }
        GrayImage img = load_pgm(path);
        if (img.is_16bit()) img = to_8bit(img);
        s.image = img;
    }
    return samples;
}

void split_by_tag(const std::vector<Sample>& all, std::vector<Sample>& tr, std::vector<Sample>& va,
                  std::vector<Sample>& te) {
    for (const Sample& s : all) {
        switch (s.split) {
            case Split::Train: tr.push_back(s); break;
            case Split::Val: va.push_back(s); break;
            case Split::Test: te.push_back(s); break;
            case Split::Unassigned:
                throw DataError("manifest contains unassigned samples; run `mtcn split` first");
        }
    }
}

// ---------------------------------------------------------------------
// Subcommand bodies.

int cmd_ingest(const GlobalOpts& g, const std::string& images_dir) {
    static const std::vector<std::pair<std::string, Label>> kClasses = {
        {"0", Label::C0}, {"0.1", Label::C01}, {"1", Label::C1}};
    std::vector<Sample> samples;
    for (const auto& [dir_name, label] : kClasses) {
        const fs::path class_dir = fs::path(images_dir) / dir_name;
        if (!fs::is_directory(class_dir))
            throw DataError("missing class directory: " + class_dir.string());
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(class_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".pgm")
                files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) {
            Sample s;
            s.path = f;
            s.label = label;
            s.group_id = fs::path(f).stem().string();
            samples.push_back(std::move(s));
        }
    }
    if (samples.empty()) throw DataError("no .pgm files found under " + images_dir);
    ensure_out_dir(g.out_dir);
    const std::string manifest = (fs::path(g.out_dir) / "manifest.tsv").string();
    save_manifest(samples, manifest, "class mapping: 0 -> 0, 0.1 -> 0.1, 1 -> 1");
    write_stanza(g.out_dir, "ingest", g.seed, "images_dir=" + images_dir + "\n");
    std::cout << "ingested " << samples.size() << " samples -> " << manifest << "\n";
    return 0;
}

int cmd_sharpen(const GlobalOpts& g, const std::string& manifest) {
    std::vector<Sample> samples = load_with_images(manifest);
    ensure_out_dir(g.out_dir);
    for (Sample& s : samples) {
        s.image = sharpen(s.image);
        s.sharpened = true;
        const std::string out = (fs::path(g.out_dir) / fs::path(s.path).filename()).string();
        save_pgm(s.image, out);
        s.path = out;
    }
    const std::string out_manifest = (fs::path(g.out_dir) / "manifest.tsv").string();
    save_manifest(samples, out_manifest, "sharpened");
    write_stanza(g.out_dir, "sharpen", g.seed, "input=" + manifest + "\n");
    std::cout << "sharpened " << samples.size() << " images -> " << out_manifest << "\n";
    return 0;
}

int cmd_augment(const GlobalOpts& g, const std::string& manifest) {
    std::vector<Sample> samples = load_with_images(manifest);
    std::vector<Sample> augmented = augment_rotations(samples);
    ensure_out_dir(g.out_dir);
    for (Sample& s : augmented) {
        const std::string out =
            (fs::path(g.out_dir) / fs::path(rotated_path(s.path, s.rotation)).filename()).string();
        save_pgm(s.image, out);
        s.path = out;
    }
    const std::string out_manifest = (fs::path(g.out_dir) / "manifest.tsv").string();
    save_manifest(augmented, out_manifest, "rotation-augmented");
    write_stanza(g.out_dir, "augment", g.seed, "input=" + manifest + "\n");
    std::cout << samples.size() << " -> " << augmented.size() << " samples -> " << out_manifest
              << "\n";
    return 0;
}

int cmd_split(const GlobalOpts& g, const std::string& manifest, double val_fraction) {
    std::vector<Sample> samples = load_manifest(manifest);
    group_split(samples, val_fraction, g.seed);
    validate_samples(samples);
    ensure_out_dir(g.out_dir);
    const std::string out_manifest = (fs::path(g.out_dir) / "manifest.tsv").string();
    save_manifest(samples, out_manifest, "split seed=" + std::to_string(g.seed));
    write_stanza(g.out_dir, "split", g.seed,
                 "input=" + manifest + "\nval_fraction=" + std::to_string(val_fraction) + "\n");
    std::cout << "split written -> " << out_manifest << "\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const TrainFlags& tf, const std::string& manifest,
              const std::string& model_config_path, long num_classes, long input_size) {
    TrainConfig tc = resolve_train_config(g, tf);
    std::vector<Sample> all = load_with_images(manifest);
    validate_samples(all);
    std::vector<Sample> tr, va, te;
    split_by_tag(all, tr, va, te);
    ModelConfig cfg = resolve_model_config(model_config_path, static_cast<std::size_t>(num_classes),
                                           static_cast<std::size_t>(input_size));
    auto [model, report] = train(cfg, tc, tr, va);
    ensure_out_dir(g.out_dir);
    const std::string model_path = (fs::path(g.out_dir) / "model.mtcn").string();
    save_model(model, model_path);
    {
        std::ofstream f(fs::path(g.out_dir) / "train_summary.txt");
        f << report_summary(report);
    }
    write_stanza(g.out_dir, "train", tc.seed, train_config_echo(tc) + encode_config(cfg));
    std::cout << "best_val_acc=" << format_pct(report.best_val_acc) << " epochs="
              << report.epochs.size() << " model -> " << model_path << "\n";
    return 0;
}

int cmd_cv(const GlobalOpts& g, const TrainFlags& tf, const std::string& manifest,
           const std::string& model_config_path, long num_classes, long input_size, long k) {
    TrainConfig tc = resolve_train_config(g, tf);
    std::vector<Sample> all = load_with_images(manifest);
    ModelConfig cfg = resolve_model_config(model_config_path, static_cast<std::size_t>(num_classes),
                                           static_cast<std::size_t>(input_size));
    CvResult r = cross_validate(cfg, tc, all, static_cast<std::size_t>(k));
    write_stanza(g.out_dir, "cv", tc.seed, train_config_echo(tc) + encode_config(cfg));
    for (std::size_t i = 0; i < r.fold_accuracies.size(); ++i)
        std::cout << "fold" << i << "=" << format_pct(r.fold_accuracies[i]) << "\n";
    std::cout << "mean_accuracy=" << format_pct(r.mean_accuracy) << "\n";
    return 0;
}

int cmd_search(const GlobalOpts& g, const TrainFlags& tf, const std::string& manifest,
               long num_classes, long budget, long k, long input_size) {
    TrainConfig tc = resolve_train_config(g, tf);
    std::vector<Sample> all = load_with_images(manifest);
    SearchSpace space;
    if (input_size != 0)
        space.input_min = space.input_max = static_cast<std::size_t>(input_size);
    auto results = topology_search(space, tc, all, static_cast<std::size_t>(budget), tc.seed,
                                   static_cast<std::size_t>(num_classes),
                                   static_cast<std::size_t>(k));
    write_stanza(g.out_dir, "search", tc.seed, train_config_echo(tc));
    ensure_out_dir(g.out_dir);
    std::ofstream best(fs::path(g.out_dir) / "best_config.txt");
    best << encode_config(results.front().config);
    for (std::size_t i = 0; i < results.size(); ++i)
        std::cout << "rank" << i << " cv_acc=" << format_pct(results[i].cv_accuracy)
                  << " params=" << param_count(results[i].config) << "\n";
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& manifest, const std::string& model_path,
             const std::string& task_name) {
    Model model = load_model(model_path);
    std::vector<Sample> all = load_with_images(manifest);
    validate_samples(all);
    std::vector<Sample> tr, va, te;
    split_by_tag(all, tr, va, te);
    if (te.empty()) throw DataError("manifest has no test samples");
    TaskSpec task = parse_task(task_name);
    ConfusionMatrix cm = evaluate(model, te, task);
    write_stanza(g.out_dir, "eval", g.seed, "model=" + model_path + "\ntask=" + task_name + "\n");
    std::cout << report({{task.name(), cm}});
    std::cout << "accuracy=" << format_pct(accuracy(cm)) << "\n";
    return 0;
}

int cmd_predict(const GlobalOpts& g, const std::string& model_path,
                const std::vector<std::string>& images) {
    Model model = load_model(model_path);
    static const char* kLabelNames[3] = {"0", "0.1", "1"};
    for (const std::string& path : images) {
        GrayImage img = load_pgm(path);
        if (img.is_16bit()) img = to_8bit(img);
        if (model.config.trained_on_sharpened) img = sharpen(img);
        img = resize_square(img, model.config.input_size);
        Tensor logits = model_forward(model, to_tensor(img), RunMode::Infer);
        auto r = softmax_xent(logits, 0); // class index irrelevant, probs wanted
        std::cout << path;
        for (std::size_t i = 0; i < r.probs.size(); ++i) {
            const std::string name = model.config.num_classes == 3
                                         ? std::string(kLabelNames[i])
                                         : "class" + std::to_string(i);
            std::cout << "\t" << name << "=" << r.probs[i];
        }
        std::cout << "\n";
    }
    (void)g;
    return 0;
}

int cmd_stats(long k1, long n1, long k2, long n2) {
    ProportionTest t = two_proportion_test(k1, n1, k2, n2);
    std::cout << "z=" << t.z << "\n";
    std::cout << "p_two_sided=" << t.p_two_sided << "\n";
    return 0;
}

int cmd_report(const GlobalOpts& g, const std::string& manifest, const std::string& model_path) {
    Model model = load_model(model_path);
    std::vector<Sample> all = load_with_images(manifest);
    validate_samples(all);
    std::vector<Sample> tr, va, te;
    split_by_tag(all, tr, va, te);
    if (te.empty()) throw DataError("manifest has no test samples");
    // Pair tasks need pair-trained models; a 3-class model reports the
    // three-class task only.
    if (model.config.num_classes != 3)
        throw ConfigError("report requires a 3-class model; use `eval --task` for pair models");
    TaskSpec task = parse_task("3class");
    std::vector<std::pair<std::string, ConfusionMatrix>> matrices;
    matrices.emplace_back(task.name(), evaluate(model, te, task));
    const std::string text = report(matrices);
    ensure_out_dir(g.out_dir);
    {
        std::ofstream f(fs::path(g.out_dir) / "report.txt");
        f << text;
        for (const auto& [name, cm] : matrices)
            f << "accuracy." << name << "=" << format_pct(accuracy(cm)) << "\n";
    }
    write_stanza(g.out_dir, "report", g.seed, "model=" + model_path + "\n");
    std::cout << text;
    return 0;
}

int cmd_fixtures() {
    FixtureCheck check = run_fixture_check();
    std::cout << check.text;
    return check.ok ? 0 : 1;
}

int cmd_synth(const GlobalOpts& g, long per_class, long size) {
    std::vector<Sample> samples =
        synth_dataset(static_cast<std::size_t>(per_class), g.seed, static_cast<std::size_t>(size));
    ensure_out_dir(g.out_dir);
    for (Sample& s : samples) {
        const std::string out = (fs::path(g.out_dir) / (s.group_id + ".pgm")).string();
        save_pgm(s.image, out);
        s.path = out;
    }
    const std::string manifest = (fs::path(g.out_dir) / "manifest.tsv").string();
    save_manifest(samples, manifest, "synthetic seed=" + std::to_string(g.seed));
    write_stanza(g.out_dir, "synth", g.seed,
                 "per_class=" + std::to_string(per_class) + "\nsize=" + std::to_string(size) +
                     "\n");
    std::cout << "generated " << samples.size() << " samples -> " << manifest << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"microtubule image classification pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "key=value config file")->configurable(false);
    app.add_option("--seed", g.seed, "master PRNG seed")
        ->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--threads", g.threads, "worker thread cap; 1 = serial reference path")
        ->each([&](const std::string&) { g.threads_set = true; });
    app.add_option("--out", g.out_dir, "output directory");

    TrainFlags tf;
    std::string manifest, images_dir, model_path, model_config_path, task_name = "3class";
    std::vector<std::string> predict_images;
    double val_fraction = 0.25;
    long num_classes = 3, input_size = 0, k = 10, budget = 10, per_class = 10, size = 100;
    long k1 = 0, n1 = 0, k2 = 0, n2 = 0;

    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--lr", tf.lr, "learning rate");
        cmd->add_option("--batch", tf.batch_size, "mini-batch size");
        cmd->add_option("--dropout", tf.dropout_rate, "dropout rate");
        cmd->add_option("--l2", tf.l2_lambda, "L2 lambda");
        cmd->add_option("--patience", tf.patience, "early-stopping patience (epochs)");
        cmd->add_option("--max-epochs", tf.max_epochs, "epoch cap");
        cmd->add_flag("--sharpen", tf.sharpen, "sharpen inputs before training");
        cmd->add_flag("--rotations", tf.rotations, "augment training set with rotations");
        cmd->add_option("--model-config", model_config_path, "topology file (default: canonical)");
        cmd->add_option("--classes", num_classes, "output classes");
        cmd->add_option("--input-size", input_size, "input resolution override");
    };

    auto* ingest = app.add_subcommand("ingest", "build a manifest from 0/, 0.1/, 1/ image dirs");
    ingest->add_option("--images", images_dir, "root directory with class subdirectories")
        ->required();

    auto* sharpen_cmd = app.add_subcommand("sharpen", "sharpen every image in a manifest");
    sharpen_cmd->add_option("--manifest", manifest, "input manifest")->required();

    auto* augment = app.add_subcommand("augment", "add 90/180/270 degree rotations");
    augment->add_option("--manifest", manifest, "input manifest")->required();

    auto* split_cmd = app.add_subcommand("split", "group-respecting train/val split");
    split_cmd->add_option("--manifest", manifest, "input manifest")->required();
    split_cmd->add_option("--val-fraction", val_fraction, "validation fraction");

    auto* train_cmd = app.add_subcommand("train", "train a model on a split manifest");
    train_cmd->add_option("--manifest", manifest, "split manifest")->required();
    add_train_flags(train_cmd);

    auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
    cv_cmd->add_option("--manifest", manifest, "manifest")->required();
    cv_cmd->add_option("--k", k, "fold count");
    add_train_flags(cv_cmd);

    auto* search = app.add_subcommand("search", "random topology search");
    search->add_option("--manifest", manifest, "manifest")->required();
    search->add_option("--budget", budget, "configs to evaluate");
    search->add_option("--k", k, "fold count");
    add_train_flags(search);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on the test split");
    eval_cmd->add_option("--manifest", manifest, "manifest with test samples")->required();
    eval_cmd->add_option("--model", model_path, "model file")->required();
    eval_cmd->add_option("--task", task_name, "3class | 0v0.1 | 0v1 | 0.1v1");

    auto* predict = app.add_subcommand("predict", "per-image class probabilities");
    predict->add_option("--model", model_path, "model file")->required();
    predict->add_option("images", predict_images, "PGM files")->required();

    auto* stats = app.add_subcommand("stats", "two-proportion z-test on two accuracy results");
    stats->add_option("--k1", k1, "successes, sample 1")->required();
    stats->add_option("--n1", n1, "trials, sample 1")->required();
    stats->add_option("--k2", k2, "successes, sample 2")->required();
    stats->add_option("--n2", n2, "trials, sample 2")->required();

    auto* report_cmd = app.add_subcommand("report", "full four-task report on the test split");
    report_cmd->add_option("--manifest", manifest, "manifest with test samples")->required();
    report_cmd->add_option("--model", model_path, "model file")->required();

    auto* fixtures = app.add_subcommand("fixtures", "published-table consistency check");

    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
    synth->add_option("--per-class", per_class, "samples per class");
    synth->add_option("--size", size, "image side length");

    // Global flags may appear after the subcommand name.
    for (CLI::App* sc : app.get_subcommands([](const CLI::App*) { return true; }))
        sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(g, images_dir);
        if (*sharpen_cmd) return cmd_sharpen(g, manifest);
        if (*augment) return cmd_augment(g, manifest);
        if (*split_cmd) return cmd_split(g, manifest, val_fraction);
        if (*train_cmd) return cmd_train(g, tf, manifest, model_config_path, num_classes, input_size);
        if (*cv_cmd) return cmd_cv(g, tf, manifest, model_config_path, num_classes, input_size, k);
        if (*search) return cmd_search(g, tf, manifest, num_classes, budget, k, input_size);
        if (*eval_cmd) return cmd_eval(g, manifest, model_path, task_name);
        if (*predict) return cmd_predict(g, model_path, predict_images);
        if (*stats) return cmd_stats(k1, n1, k2, n2);
        if (*report_cmd) return cmd_report(g, manifest, model_path);
        if (*fixtures) return cmd_fixtures();
        if (*synth) return cmd_synth(g, per_class, size);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
