#include "mtcn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mtcn/image_ops.hpp"

namespace mtcn {

TaskSpec TaskSpec::pair(Label a, Label b) {
    if (a == b) throw ConfigError("pair task: classes must be distinct");
    if (static_cast<int>(a) > static_cast<int>(b)) std::swap(a, b);
    return {Kind::Pair, a, b};
}

std::vector<Label> TaskSpec::classes() const {
    if (kind == Kind::ThreeClass) return {Label::C0, Label::C01, Label::C1};
    return {a, b};
}

std::string TaskSpec::name() const {
    if (kind == Kind::ThreeClass) return "3 classes";
    return label_name(a) + " vs " + label_name(b);
}

TaskSpec parse_task(const std::string& s) {
    if (s == "3class" || s == "3") return TaskSpec::three_class();
    auto v = s.find('v');
    if (v != std::string::npos) {
        return TaskSpec::pair(parse_label(s.substr(0, v)), parse_label(s.substr(v + 1)));
    }
    throw ParseError("unknown task '" + s + "' (expected 3class, 0v0.1, 0v1, or 0.1v1)");
}

ConfusionMatrix::ConfusionMatrix(TaskSpec t) : task(t) {
    const std::size_t n = task.num_classes();
    counts.assign(n, std::vector<long>(n, 0));
}

long ConfusionMatrix::total() const {
    long s = 0;
    for (const auto& row : counts)
        for (long v : row) s += v;
    return s;
}

long ConfusionMatrix::trace() const {
    long s = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) s += counts[i][i];
    return s;
}

void ConfusionMatrix::add(Label predicted, Label truth) {
    const auto cls = task.classes();
    const auto pi = std::find(cls.begin(), cls.end(), predicted);
    const auto ti = std::find(cls.begin(), cls.end(), truth);
    if (pi == cls.end() || ti == cls.end())
        throw ConfigError("confusion matrix: label outside task class set");
    ++counts[static_cast<std::size_t>(pi - cls.begin())]
            [static_cast<std::size_t>(ti - cls.begin())];
}

double accuracy(const ConfusionMatrix& cm) {
    const long total = cm.total();
    if (total == 0) throw ConfigError("accuracy: empty confusion matrix");
    return 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::string format_pct(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

ConfusionMatrix evaluate(const Model& model, const std::vector<Sample>& test_set,
                         const TaskSpec& task) {
    if (model.config.num_classes != task.num_classes())
        throw ConfigError("evaluate: model has " + std::to_string(model.config.num_classes) +
                          " outputs but task '" + task.name() + "' needs " +
                          std::to_string(task.num_classes()));
    validate_samples(test_set);
    const auto cls = task.classes();
    ConfusionMatrix cm(task);
    for (const Sample& s : test_set) {
        if (task.kind == TaskSpec::Kind::Pair && s.label != task.a && s.label != task.b)
            continue; // out-of-pair true class: answer ignored
        if (s.image.pixels.empty())
            throw DataError("evaluate: sample image not loaded: " + s.path);
        Tensor img = to_tensor(resize_square(s.image, model.config.input_size));
        Tensor logits = model_forward(model, img, RunMode::Infer);
        std::size_t best = 0;
        for (std::size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[best]) best = i; // ties keep the lower index
        cm.add(cls[best], s.label);
    }
    return cm;
}

std::vector<Label> majority_vote(const std::vector<RaterSheet>& sheets, const TaskSpec& task) {
    if (sheets.size() < 2) throw ConfigError("majority_vote: need at least 2 raters");
    const std::size_t n = sheets[0].answers.size();
    for (const RaterSheet& s : sheets)
        if (s.answers.size() != n)
            throw DataError("majority_vote: rater '" + s.rater_id +
                            "' does not cover all samples");
    const auto cls = task.classes();
    std::vector<Label> out(n, Label::C0);
    for (std::size_t i = 0; i < n; ++i) {
        std::map<Label, int> tally;
        for (const RaterSheet& s : sheets) {
            if (std::find(cls.begin(), cls.end(), s.answers[i]) == cls.end())
                throw DataError("majority_vote: label outside task class set");
            ++tally[s.answers[i]];
        }
        int best = 0;
        for (const auto& [label, votes] : tally) best = std::max(best, votes);
        int n_best = 0;
        Label mode = Label::C0;
        for (const auto& [label, votes] : tally)
            if (votes == best) {
                ++n_best;
                mode = label;
            }
        // Unique mode wins; a full tie resolves to the first-listed rater.
        out[i] = n_best == 1 ? mode : sheets[0].answers[i];
    }
    return out;
}

std::vector<RaterSheet> load_rater_sheets(const std::string& path, const TaskSpec& task) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open rater sheet: " + path);
    // sample_id -> order of first appearance; rater -> per-sample label
    std::vector<std::string> sample_order;
    std::map<std::string, std::size_t> sample_index;
    std::map<std::string, std::map<std::size_t, Label>> by_rater;
    std::vector<std::string> rater_order;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string sample_id, task_name, rater_id, label_s;
        if (!(std::getline(ls, sample_id, '\t') && std::getline(ls, task_name, '\t') &&
              std::getline(ls, rater_id, '\t') && std::getline(ls, label_s)))
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        TaskSpec t = parse_task(task_name);
        if (t.kind != task.kind || t.a != task.a || t.b != task.b) continue;
        auto [it, inserted] = sample_index.emplace(sample_id, sample_order.size());
        if (inserted) sample_order.push_back(sample_id);
        if (by_rater.find(rater_id) == by_rater.end()) rater_order.push_back(rater_id);
        by_rater[rater_id][it->second] = parse_label(label_s);
    }

    std::vector<RaterSheet> sheets;
    for (const std::string& rid : rater_order) {
        RaterSheet s;
        s.rater_id = rid;
        s.answers.resize(sample_order.size());
        const auto& answers = by_rater[rid];
        for (std::size_t i = 0; i < sample_order.size(); ++i) {
            auto it = answers.find(i);
            if (it == answers.end())
                throw DataError(path + ": rater '" + rid + "' missing sample '" +
                                sample_order[i] + "'");
            s.answers[i] = it->second;
        }
        sheets.push_back(std::move(s));
    }
    return sheets;
}

ProportionTest two_proportion_test(long k1, long n1, long k2, long n2) {
    if (n1 <= 0 || n2 <= 0) throw ConfigError("two_proportion_test: n must be positive");
    if (k1 < 0 || k1 > n1 || k2 < 0 || k2 > n2)
        throw ConfigError("two_proportion_test: k out of range");
    const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
    const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
    const double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
    const double var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    if (var == 0.0) {
        // Both groups all-success or all-failure: no evidence of difference.
        return {0.0, 1.0};
    }
    const double z = (p2 - p1) / std::sqrt(var);
    const double p = std::erfc(std::fabs(z) / std::sqrt(2.0));
    return {z, p};
}

std::string report(const std::vector<std::pair<std::string, ConfusionMatrix>>& matrices) {
    std::ostringstream os;
    os << "Classification report\n";
    os << "=====================\n\n";
    if (matrices.empty()) return os.str();

    os << "Accuracy\n";
    for (const auto& [name, cm] : matrices)
        os << "  " << std::left << std::setw(28) << name + " (" + cm.task.name() + ")"
           << format_pct(accuracy(cm)) << "\n";
    os << "\n";

    for (const auto& [name, cm] : matrices) {
        const auto cls = cm.task.classes();
        os << name << " — " << cm.task.name() << " (predicted rows x true columns)\n";
        os << "  pred\\true";
        for (Label c : cls) os << std::setw(8) << label_name(c);
        os << "\n";
        for (std::size_t p = 0; p < cls.size(); ++p) {
            os << "  " << std::left << std::setw(9) << label_name(cls[p]) << std::right;
            for (std::size_t t = 0; t < cls.size(); ++t) os << std::setw(8) << cm.counts[p][t];
            os << "\n";
        }
        os << "\n";
    }
    return os.str();
}

namespace {

ConfusionMatrix fixture(TaskSpec task, std::initializer_list<std::initializer_list<long>> rows) {
    ConfusionMatrix cm(task);
    std::size_t p = 0;
    for (const auto& row : rows) {
        std::size_t t = 0;
        for (long v : row) cm.counts[p][t++] = v;
        ++p;
    }
    return cm;
}

} // namespace

Fixtures embedded_fixtures() {
    // Expert majority voting, three classes (published Table III).
    // Rows are predictions 0 / 0.1 / 1, columns the true class.
    Fixtures f = {
        fixture(TaskSpec::three_class(), {{84, 6, 3}, {16, 58, 53}, {0, 36, 44}}),
        // Expert voting, pair tasks (published Table IV).
        fixture(TaskSpec::pair(Label::C0, Label::C01), {{84, 6}, {16, 94}}),
        fixture(TaskSpec::pair(Label::C0, Label::C1), {{84, 3}, {16, 97}}),
        fixture(TaskSpec::pair(Label::C01, Label::C1), {{75, 70}, {25, 30}}),
        // CNN trained with rotations + sharpening, three classes (Table V).
        fixture(TaskSpec::three_class(), {{87, 27, 19}, {10, 58, 28}, {3, 15, 53}}),
        // CNN+T+S pair tasks (Table VI).
        fixture(TaskSpec::pair(Label::C0, Label::C01), {{91, 14}, {9, 86}}),
        fixture(TaskSpec::pair(Label::C0, Label::C1), {{90, 8}, {10, 92}}),
        fixture(TaskSpec::pair(Label::C01, Label::C1), {{71, 30}, {29, 70}}),
    };
    return f;
}

FixtureCheck run_fixture_check() {
    const Fixtures f = embedded_fixtures();
    std::ostringstream os;
    bool ok = true;

    struct Row {
        const char* name;
        const ConfusionMatrix* cm;
        double published; // accuracy from the published summary table
        bool discrepancy; // summary and matrix disagree in the source
    };
    const Row rows[] = {
        {"voting 3 classes", &f.voting_3class, 62.00, false},
        {"voting 0 vs 0.1", &f.voting_0_v_01, 89.00, false},
        {"voting 0 vs 1", &f.voting_0_v_1, 90.50, false},
        {"voting 0.1 vs 1", &f.voting_01_v_1, 51.00, true},
        {"CNN+T+S 3 classes", &f.cnn_3class, 66.00, false},
        {"CNN+T+S 0 vs 0.1", &f.cnn_0_v_01, 88.50, false},
        {"CNN+T+S 0 vs 1", &f.cnn_0_v_1, 91.00, false},
        {"CNN+T+S 0.1 vs 1", &f.cnn_01_v_1, 70.50, false},
    };

    os << "Fixture consistency check\n";
    os << "-------------------------\n";
    for (const Row& r : rows) {
        const double acc = accuracy(*r.cm);
        if (r.discrepancy) {
            os << "  " << r.name << ": matrix-derived " << format_pct(acc) << "\n";
            os << "  WARNING: published summary lists " << format_pct(r.published)
               << " for this task, but its own confusion matrix yields " << format_pct(acc)
               << "; reporting the matrix-derived value.\n";
            if (format_pct(acc) != "52.50") ok = false;
        } else {
            const bool match = format_pct(acc) == format_pct(r.published);
            os << "  " << r.name << ": " << format_pct(acc) << " (expected "
               << format_pct(r.published) << ") " << (match ? "ok" : "MISMATCH") << "\n";
            if (!match) ok = false;
        }
    }
    os << (ok ? "fixtures: all checks passed\n" : "fixtures: MISMATCH detected\n");
    return {os.str(), ok};
}

} // namespace mtcn
