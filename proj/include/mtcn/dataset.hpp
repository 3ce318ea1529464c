#ifndef MTCN_DATASET_HPP
#define MTCN_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mtcn/pgm.hpp"

namespace mtcn {

// Paclitaxel exposure classes: untreated "0", 0.1M "0.1", 1M "1".
enum class Label { C0 = 0, C01 = 1, C1 = 2 };

constexpr std::size_t kNumLabels = 3;

std::string label_name(Label l);
Label parse_label(const std::string& s); // rejects unknown labels

enum class Split { Unassigned, Train, Val, Test };

std::string split_name(Split s);
Split parse_split(const std::string& s);

// One image. All rotations of the same source share a group_id so that
// splits never place a rotated copy on the other side of its original.
struct Sample {
    std::string path; // empty for purely in-memory samples
    Label label = Label::C0;
    std::string group_id;
    int rotation = 0; // degrees clockwise: 0, 90, 180, 270
    bool sharpened = false;
    Split split = Split::Unassigned;
    GrayImage image; // 8-bit; may be empty until loaded
};

// Manifest file: UTF-8, one record per line,
// tab-separated `path  label  group_id  split`; '#' lines are comments.
// Rotated copies carry a `_r90`/`_r180`/`_r270` path suffix, which is
// how rotation survives the round-trip.
std::vector<Sample> load_manifest(const std::string& path);
void save_manifest(const std::vector<Sample>& samples, const std::string& path,
                   const std::string& header_comment = "");

int rotation_from_path(const std::string& path);
std::string rotated_path(const std::string& path, int degrees);

// Checks the invariants every pipeline stage must preserve: no group
// spans train/val or {train,val}/test, labels agree within a group, and
// test samples are unrotated. Throws DataError on violation.
void validate_samples(const std::vector<Sample>& samples);

// Appends the 90/180/270 rotations of every input sample (which must all
// have rotation 0), quadrupling the set. Images must be loaded and square.
std::vector<Sample> augment_rotations(const std::vector<Sample>& samples);

// Group-respecting, label-stratified split; deterministic per seed.
// Tags each sample's split field as Train or Val.
void group_split(std::vector<Sample>& samples, double val_fraction, std::uint64_t seed);

// Group-respecting, label-stratified k-fold partition. Returns per-fold
// index lists into `samples`.
std::vector<std::vector<std::size_t>> kfold(const std::vector<Sample>& samples, std::size_t k,
                                            std::uint64_t seed);

} // namespace mtcn

#endif
