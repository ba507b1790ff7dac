#pragma once
// The full experiment configuration and the reference desk-scale setup:
// models trained on one synthetic draw, evaluated on an independent draw.

#include "vlad/attacks.hpp"
#include "vlad/baselines.hpp"
#include "vlad/conv_video_classifier.hpp"
#include "vlad/datagen.hpp"
#include "vlad/dual_encoder_scorer.hpp"
#include "vlad/evaluation.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace vlad {

struct ExperimentConfig {
    // dataset
    SyntheticConfig train_data;
    SyntheticConfig eval_data;
    double split_ratio = 0.8;
    std::uint64_t split_seed = 11;
    // models
    RecognizerConfig recognizer;
    ScorerConfig scorer;
    // attack
    AttackSpec attack;
    // detector
    double theta = kDefaultTheta;
    std::size_t context_frames = 32;
    PseudoFrameMethod pseudo_frames = PseudoFrameMethod::neighbor_mean;
    std::uint64_t shuffle_seed = 99;
    int shuffle_repeats = 1;
    // evaluation
    std::vector<std::string> attacks;
    std::vector<double> sweep_epsilons;
    std::vector<std::string> detectors = kGridDetectorOrder;
    // bench
    std::size_t bench_warmup = 1;
    std::size_t bench_clips = 20;

    /// Throws a config error naming the first bad field.
    void validate() const;
};

/// The reference setup: 10 classes x 50 clips, 16 frames, 64x64, fixed seeds.
ExperimentConfig reference_config();

/// Sections: dataset, models, attack, detector, evaluation, bench.
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
/// Layers `j` over `base`; keys that are absent keep the base value.
/// Unknown sections or keys are config errors.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = reference_config());
std::string config_digest(const ExperimentConfig& config);

std::string_view to_string(PseudoFrameMethod method) noexcept;
PseudoFrameMethod parse_pseudo_frame_method(std::string_view name);

/// Trained models plus the evaluation pool, split into calibration and test.
struct PreparedExperiment {
    ExperimentConfig config;
    std::unique_ptr<ConvVideoClassifier> recognizer;
    std::unique_ptr<DualEncoderScorer> scorer;
    double recognizer_accuracy = 0.0;  ///< clip accuracy on the evaluation pool
    double scorer_accuracy = 0.0;      ///< frame retrieval accuracy on the evaluation pool
    Dataset eval_pool;
    DatasetSplit split;  ///< of the correctly classified evaluation clips
};

PreparedExperiment prepare_experiment(const ExperimentConfig& config);

/// Advit, Shuffle, VLAD-1, VLAD-2, A1..A4 over the prepared models. The
/// detectors reference `prepared`, which must outlive them.
std::vector<Detector> standard_detectors(const PreparedExperiment& prepared);

}  // namespace vlad
