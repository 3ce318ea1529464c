#include "mtcn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mtcn/image_ops.hpp"
#include "mtcn/prng.hpp"

namespace mtcn {

std::string label_name(Label l) {
    switch (l) {
    case Label::C0: return "0";
    case Label::C01: return "0.1";
    case Label::C1: return "1";
    }
    return "?";
}

Label parse_label(const std::string& s) {
    if (s == "0") return Label::C0;
    if (s == "0.1") return Label::C01;
    if (s == "1") return Label::C1;
    throw ParseError("unknown class label '" + s + "' (expected 0, 0.1, or 1)");
}

std::string split_name(Split s) {
    switch (s) {
    case Split::Unassigned: return "unassigned";
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s) {
    if (s == "unassigned") return Split::Unassigned;
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw ParseError("unknown split tag '" + s + "'");
}

int rotation_from_path(const std::string& path) {
    auto stem_has = [&](const std::string& suffix) {
        auto dot = path.rfind('.');
        const std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
        return stem.size() >= suffix.size() &&
               stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (stem_has("_r90")) return 90;
    if (stem_has("_r180")) return 180;
    if (stem_has("_r270")) return 270;
    return 0;
}

std::string rotated_path(const std::string& path, int degrees) {
    auto dot = path.rfind('.');
    const std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    return stem + "_r" + std::to_string(degrees) + ext;
}

std::vector<Sample> load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);
    std::vector<Sample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 4)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 4 tab-separated fields, got " +
                             std::to_string(fields.size()));
        Sample s;
        s.path = fields[0];
        try {
            s.label = parse_label(fields[1]);
            s.split = parse_split(fields[3]);
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        s.group_id = fields[2];
        s.rotation = rotation_from_path(s.path);
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_manifest(const std::vector<Sample>& samples, const std::string& path,
                   const std::string& header_comment) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "# path\tlabel\tgroup_id\tsplit\n";
    f << "# classes: 0 = untreated, 0.1 = 0.1M, 1 = 1M\n";
    if (!header_comment.empty()) f << "# " << header_comment << "\n";
    for (const Sample& s : samples)
        f << s.path << "\t" << label_name(s.label) << "\t" << s.group_id << "\t"
          << split_name(s.split) << "\n";
    if (!f) throw IoError("write failed: " + path);
}

void validate_samples(const std::vector<Sample>& samples) {
    std::map<std::string, Label> group_label;
    std::map<std::string, std::set<Split>> group_splits;
    for (const Sample& s : samples) {
        auto [it, inserted] = group_label.emplace(s.group_id, s.label);
        if (!inserted && it->second != s.label)
            throw DataError("group '" + s.group_id + "' has inconsistent labels");
        if (s.split != Split::Unassigned) group_splits[s.group_id].insert(s.split);
        if (s.split == Split::Test && s.rotation != 0)
            throw DataError("rotated image in test set: " + s.path);
    }
    for (const auto& [gid, splits] : group_splits) {
        const bool in_test = splits.count(Split::Test) > 0;
        const bool in_train = splits.count(Split::Train) > 0;
        const bool in_val = splits.count(Split::Val) > 0;
        if (in_test && (in_train || in_val))
            throw DataError("group '" + gid + "' leaks between test and train/val");
        if (in_train && in_val)
            throw DataError("group '" + gid + "' spans both train and val");
    }
}

std::vector<Sample> augment_rotations(const std::vector<Sample>& samples) {
    for (const Sample& s : samples)
        if (s.rotation != 0)
            throw DataError("augment_rotations: input already contains rotated sample " + s.path);
    std::vector<Sample> out;
    out.reserve(samples.size() * 4);
    for (const Sample& s : samples) {
        out.push_back(s);
        for (int deg : {90, 180, 270}) {
            Sample r = s;
            r.rotation = deg;
            if (!r.path.empty()) r.path = rotated_path(s.path, deg);
            if (!s.image.pixels.empty()) r.image = rotate90(s.image, deg / 90);
            out.push_back(std::move(r));
        }
    }
    return out;
}

namespace {

// Groups of one class in first-appearance order, keyed by label.
std::map<Label, std::vector<std::string>> groups_by_label(const std::vector<Sample>& samples) {
    std::map<Label, std::vector<std::string>> by_label;
    std::set<std::string> seen;
    for (const Sample& s : samples) {
        if (seen.insert(s.group_id).second) by_label[s.label].push_back(s.group_id);
    }
    return by_label;
}

} // namespace

void group_split(std::vector<Sample>& samples, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("group_split: val_fraction must be in (0,1)");
    auto by_label = groups_by_label(samples);
    std::set<std::string> val_groups;
    Prng rng(seed, Stream::Split);
    for (auto& [label, groups] : by_label) {
        if (groups.size() < 2)
            throw DataError("group_split: class " + label_name(label) +
                            " has fewer than 2 groups");
        shuffle(groups, rng);
        std::size_t n_val = static_cast<std::size_t>(
            std::llround(val_fraction * static_cast<double>(groups.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, groups.size() - 1);
        for (std::size_t i = 0; i < n_val; ++i) val_groups.insert(groups[i]);
    }
    for (Sample& s : samples)
        s.split = val_groups.count(s.group_id) ? Split::Val : Split::Train;
    validate_samples(samples);
}

std::vector<std::vector<std::size_t>> kfold(const std::vector<Sample>& samples, std::size_t k,
                                            std::uint64_t seed) {
    if (k < 2) throw ConfigError("kfold: k must be >= 2");
    auto by_label = groups_by_label(samples);
    std::map<std::string, std::size_t> group_fold;
    Prng rng(seed, Stream::Fold);
    for (auto& [label, groups] : by_label) {
        if (groups.size() < k)
            throw DataError("kfold: class " + label_name(label) + " has " +
                            std::to_string(groups.size()) + " groups, need >= " +
                            std::to_string(k));
        shuffle(groups, rng);
        for (std::size_t i = 0; i < groups.size(); ++i) group_fold[groups[i]] = i % k;
    }
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < samples.size(); ++i)
        folds[group_fold.at(samples[i].group_id)].push_back(i);
    return folds;
}

} // namespace mtcn
