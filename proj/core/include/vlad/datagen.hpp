#pragma once

// Synthetic moving-figure clips and the calibration/test protocol built on
// top of any dataset.
//
// Each class is a (shape, motion direction) pair. A figure slides across a
// dim, lightly noisy background and drags a thin trail behind it, so the
// class can be read from a single frame (shape + trail side) as well as from
// the clip. Intensities are quantised to multiples of 2^-16.

#include "vlad/attacks.hpp"
#include "vlad/video.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vlad {

struct SyntheticConfig {
    std::size_t n_classes = 10;
    std::size_t clips_per_class = 50;
    std::size_t n_frames = 16;
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t channels = 3;
    std::uint64_t seed = 2024;
    std::string id_prefix = "syn";
};

/// Largest class count the renderer supports (shapes x directions).
std::size_t max_synthetic_classes() noexcept;

/// Class labels in canonical order, e.g. "square moving right".
std::vector<std::string> synthetic_class_labels(std::size_t n_classes);

/// Throws a validation error naming the offending parameter.
void validate(const SyntheticConfig& config);

/// Clip `index` of class `label`; depends only on (seed, label, index).
VideoTensor render_synthetic_clip(const SyntheticConfig& config, std::size_t label, std::size_t index);

Dataset generate_synthetic_dataset(const SyntheticConfig& config);

/// Keeps the clips whose argmax prediction equals the label. Throws a
/// protocol error if nothing survives.
Dataset filter_correctly_classified(const Dataset& dataset, const Recognizer& model);

struct DatasetSplit {
    LabelVocabulary vocabulary;
    std::vector<LabeledClip> calibration;
    std::vector<LabeledClip> test_clean;
    double ratio = 0.8;
    std::uint64_t seed = 0;
};

/// Stratified by class and deterministic in `seed`. Per-class calibration
/// counts use largest-remainder rounding so the global share is within one
/// clip of `ratio`; every class keeps at least one clip on each side.
DatasetSplit split_dataset(const Dataset& dataset, double ratio = 0.8, std::uint64_t seed = 0);

struct PairedClip {
    LabeledClip clean;
    AdversarialResult adversarial;
};

struct PairedTestSet {
    LabelVocabulary vocabulary;
    AttackSpec attack;
    std::vector<PairedClip> pairs;
    std::size_t attempted = 0;  ///< test clips attacked, including dropped failures

    double success_rate() const noexcept
    {
        return attempted == 0 ? 0.0 : static_cast<double>(pairs.size()) / static_cast<double>(attempted);
    }
};

/// Attacks every clean test clip; failed attacks are dropped from both sides.
/// Re-checks that each kept adversarial clip is misclassified. Throws a
/// protocol error when no attack succeeds.
PairedTestSet build_paired_test_set(const DatasetSplit& split, const AttackSpec& attack, const Recognizer& model);

/// Throws if the pairing invariants do not hold.
void verify_paired_test_set(const PairedTestSet& set, const Recognizer& model);

}  // namespace vlad
