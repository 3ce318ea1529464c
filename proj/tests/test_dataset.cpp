#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "mtcn/dataset.hpp"
#include "mtcn/synth.hpp"

using namespace mtcn;

namespace {

std::vector<Sample> make_groups(std::size_t groups_per_class, std::size_t per_group = 1) {
    std::vector<Sample> out;
    for (Label label : {Label::C0, Label::C01, Label::C1}) {
        for (std::size_t g = 0; g < groups_per_class; ++g) {
            for (std::size_t m = 0; m < per_group; ++m) {
                Sample s;
                s.label = label;
                s.group_id = label_name(label) + "-g" + std::to_string(g);
                s.path = s.group_id + "-m" + std::to_string(m) + ".pgm";
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

GrayImage tiny_image(std::uint16_t v) {
    GrayImage img;
    img.width = img.height = 4;
    img.maxval = 255;
    img.pixels.assign(16, v);
    img.pixels[0] = 255; // break rotational symmetry
    return img;
}

} // namespace

TEST_CASE("label and split parsing rejects unknown values") {
    CHECK(parse_label("0") == Label::C0);
    CHECK(parse_label("0.1") == Label::C01);
    CHECK(parse_label("1") == Label::C1);
    CHECK_THROWS_AS(parse_label("2"), ParseError);
    CHECK_THROWS_AS(parse_label("0.2"), ParseError);
    CHECK_THROWS_AS(parse_split("validation"), ParseError);
}

TEST_CASE("manifest round-trips and rejects malformed lines") {
    auto samples = make_groups(2);
    samples[0].split = Split::Train;
    samples[1].split = Split::Test;
    const std::string path = "test_manifest.tsv";
    save_manifest(samples, path);
    auto back = load_manifest(path);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].path == samples[i].path);
        CHECK(back[i].label == samples[i].label);
        CHECK(back[i].group_id == samples[i].group_id);
        CHECK(back[i].split == samples[i].split);
    }
    std::remove(path.c_str());

    {
        std::ofstream f(path);
        f << "a.pgm\t0.5\tg1\ttrain\n";
    }
    CHECK_THROWS_AS(load_manifest(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("rotation survives the manifest via path suffix") {
    Sample s;
    s.path = "img_007.pgm";
    CHECK(rotation_from_path(rotated_path(s.path, 90)) == 90);
    CHECK(rotation_from_path(rotated_path(s.path, 180)) == 180);
    CHECK(rotation_from_path(rotated_path(s.path, 270)) == 270);
    CHECK(rotation_from_path(s.path) == 0);
}

TEST_CASE("validate_samples catches leakage, label drift, rotated test images") {
    auto ok = make_groups(3, 2);
    for (auto& s : ok) s.split = Split::Train;
    CHECK_NOTHROW(validate_samples(ok));

    auto leak = make_groups(3, 2);
    leak[0].split = Split::Train;
    leak[1].split = Split::Test; // same group
    CHECK_THROWS_AS(validate_samples(leak), DataError);

    auto span = make_groups(3, 2);
    span[0].split = Split::Train;
    span[1].split = Split::Val;
    CHECK_THROWS_AS(validate_samples(span), DataError);

    auto drift = make_groups(3, 2);
    drift[1].label = Label::C1;
    CHECK_THROWS_AS(validate_samples(drift), DataError);

    auto rotated = make_groups(1, 1);
    rotated[0].rotation = 90;
    rotated[0].split = Split::Test;
    CHECK_THROWS_AS(validate_samples(rotated), DataError);
}

TEST_CASE("augment_rotations quadruples and preserves groups and labels") {
    auto samples = make_groups(5);
    for (auto& s : samples) s.image = tiny_image(100);
    auto out = augment_rotations(samples);
    CHECK(out.size() == samples.size() * 4);

    std::map<std::string, std::set<int>> rotations;
    std::map<std::string, std::set<std::string>> labels;
    for (const auto& s : out) {
        rotations[s.group_id].insert(s.rotation);
        labels[s.group_id].insert(label_name(s.label));
    }
    for (const auto& [gid, rots] : rotations)
        CHECK(rots == std::set<int>{0, 90, 180, 270});
    for (const auto& [gid, ls] : labels) CHECK(ls.size() == 1);

    CHECK(augment_rotations({}).empty());
    CHECK_THROWS_AS(augment_rotations(out), DataError); // double augmentation

    // Per-class proportions are preserved exactly.
    std::map<Label, std::size_t> before, after;
    for (const auto& s : samples) ++before[s.label];
    for (const auto& s : out) ++after[s.label];
    for (const auto& [label, n] : before) CHECK(after[label] == 4 * n);
}

TEST_CASE("group_split is stratified, leak-free, deterministic") {
    auto samples = make_groups(100, 4);
    group_split(samples, 0.1, 42);

    std::map<Label, std::set<std::string>> val_groups, train_groups;
    for (const auto& s : samples)
        (s.split == Split::Val ? val_groups : train_groups)[s.label].insert(s.group_id);
    for (Label label : {Label::C0, Label::C01, Label::C1}) {
        CHECK(val_groups[label].size() == 10);
        for (const auto& g : val_groups[label]) CHECK(train_groups[label].count(g) == 0);
    }

    auto again = make_groups(100, 4);
    group_split(again, 0.1, 42);
    for (std::size_t i = 0; i < samples.size(); ++i) CHECK(again[i].split == samples[i].split);

    auto different = make_groups(100, 4);
    group_split(different, 0.1, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (different[i].split != samples[i].split) any_diff = true;
    CHECK(any_diff);

    auto tiny = make_groups(1);
    CHECK_THROWS_AS(group_split(tiny, 0.5, 1), DataError);
    CHECK_THROWS_AS(group_split(samples, 0.0, 1), ConfigError);
}

TEST_CASE("kfold partitions groups evenly and disjointly") {
    auto samples = make_groups(20, 2);
    auto folds = kfold(samples, 4, 7);
    REQUIRE(folds.size() == 4);

    std::set<std::size_t> seen;
    for (const auto& fold : folds) {
        std::map<Label, std::set<std::string>> fold_groups;
        for (std::size_t idx : fold) {
            CHECK(seen.insert(idx).second); // pairwise disjoint
            fold_groups[samples[idx].label].insert(samples[idx].group_id);
        }
        for (Label label : {Label::C0, Label::C01, Label::C1})
            CHECK(fold_groups[label].size() == 5); // 20 groups / 4 folds
    }
    CHECK(seen.size() == samples.size()); // union is everything

    // Groups never straddle folds.
    std::map<std::string, std::set<std::size_t>> group_fold;
    for (std::size_t f = 0; f < folds.size(); ++f)
        for (std::size_t idx : folds[f]) group_fold[samples[idx].group_id].insert(f);
    for (const auto& [gid, fs] : group_fold) CHECK(fs.size() == 1);

    CHECK_THROWS_AS(kfold(make_groups(3), 4, 1), DataError);
    CHECK_THROWS_AS(kfold(samples, 1, 1), ConfigError);

    auto two = kfold(make_groups(4), 2, 9);
    CHECK(two[0].size() + two[1].size() == 12);
}
