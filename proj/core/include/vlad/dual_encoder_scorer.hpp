#pragma once

// Desk-scale frame-label scorer. The frame encoder sees a binary foreground
// mask (max channel above a threshold) pooled into an occupancy grid, then a
// tanh hidden layer and a linear projection into the embedding space. Labels
// are rows of a learned embedding table keyed by label text. Similarity is
// the dot product divided by the temperature.

#include "vlad/checkpoint.hpp"
#include "vlad/models.hpp"
#include "vlad/nn_ops.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vlad {

struct ScorerConfig {
    std::uint64_t seed = 4321;
    int epochs = 30;
    double learning_rate = 0.01;
    std::size_t batch_size = 64;
    std::size_t pool = 4;
    std::size_t hidden = 64;
    std::size_t embedding_dim = 16;
    double mask_threshold = 0.5;
    double temperature = 1.0;
    std::size_t min_clips_per_class = 20;
};

void to_json(nlohmann::json& j, const ScorerConfig& c);
void from_json(const nlohmann::json& j, ScorerConfig& c);

class DualEncoderScorer final : public FrameLabelScorer {
public:
    static DualEncoderScorer initialize(const LabelVocabulary& vocabulary,
                                        std::size_t frame_height,
                                        std::size_t frame_width,
                                        const ScorerConfig& config);
    static DualEncoderScorer from_checkpoint(const Checkpoint& checkpoint);

    /// Contrastive training over every frame of every clip: each frame's
    /// embedding is pulled toward its label row and pushed from all others.
    void train(const Dataset& dataset, int until_epoch);

    /// Throws if a vocabulary label has no embedding in this scorer.
    SimilarityMatrix similarity(const VideoTensor& frames, const LabelVocabulary& vocabulary) const override;

    /// Embedding of a single frame (H x W x C intensities).
    std::vector<double> encode_frame(std::span<const float> frame, std::size_t channels) const;

    const LabelVocabulary& training_vocabulary() const noexcept { return vocabulary_; }
    const ScorerConfig& config() const noexcept { return config_; }
    void set_temperature(double temperature);
    int epochs_completed() const noexcept { return epochs_completed_; }
    std::span<const ParameterTensor> parameters() const noexcept { return params_; }

    Checkpoint to_checkpoint() const;

private:
    DualEncoderScorer(LabelVocabulary vocabulary, std::size_t frame_height, std::size_t frame_width, ScorerConfig config);

    std::vector<double> occupancy(std::span<const float> frame, std::size_t channels) const;

    LabelVocabulary vocabulary_;
    std::unordered_map<std::string, std::size_t> label_rows_;
    std::size_t frame_height_;
    std::size_t frame_width_;
    std::size_t grid_size_;
    ScorerConfig config_;
    std::vector<ParameterTensor> params_;  // frame.w1, frame.b1, frame.w2, frame.b2, label.embedding
    std::vector<AdamSlot> optimizer_;
    std::int64_t optimizer_step_ = 0;
    int epochs_completed_ = 0;
};

DualEncoderScorer train_scorer(const Dataset& dataset, const ScorerConfig& config);

/// Fraction of frames (over all clips) whose highest-similarity label is the clip label.
double frame_retrieval_accuracy(const FrameLabelScorer& scorer, const Dataset& dataset);

}  // namespace vlad
