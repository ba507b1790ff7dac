#pragma once

// Desk-scale action recognizer: fixed spatial average pooling, one 3x3x3
// spatio-temporal convolution with tanh, a soft maximum (log-mean-exp) over
// each spatial cell, averaged over each temporal segment, and a linear class
// head. Smooth everywhere, so its input gradient can be checked
// against finite differences.

#include "vlad/checkpoint.hpp"
#include "vlad/models.hpp"
#include "vlad/nn_ops.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace vlad {

struct RecognizerConfig {
    std::uint64_t seed = 1234;
    int epochs = 5;
    double learning_rate = 0.01;
    std::size_t batch_size = 16;
    std::size_t pool = 4;
    double input_center = 0.5;  ///< pooled intensities map to (x - center) * scale
    double input_scale = 4.0;
    std::size_t conv_channels = 8;
    std::size_t temporal_segments = 4;
    std::size_t spatial_cells = 1;
    double pool_sharpness = 8.0;  ///< beta of the per-cell log-mean-exp
    std::size_t min_clips_per_class = 20;
};

void to_json(nlohmann::json& j, const RecognizerConfig& c);
void from_json(const nlohmann::json& j, RecognizerConfig& c);

class ConvVideoClassifier final : public Recognizer {
public:
    /// Random convolution weights from config.seed, zero class head (uniform predictions).
    static ConvVideoClassifier initialize(const LabelVocabulary& vocabulary,
                                          const VideoShape& input_shape,
                                          const RecognizerConfig& config);
    static ConvVideoClassifier from_checkpoint(const Checkpoint& checkpoint);

    /// Continue training from epochs_completed() up to `until_epoch`.
    void train(const Dataset& dataset, int until_epoch);

    ClassProbabilities predict(const VideoTensor& video) const override;
    std::vector<double> loss_gradient(const VideoTensor& video, std::size_t label) const override;
    const LabelVocabulary& vocabulary() const override { return vocabulary_; }

    // Double-precision entry points on a raw N*H*W*C buffer of input_shape().
    std::vector<double> logits(std::span<const double> input) const;
    double loss(std::span<const double> input, std::size_t label) const;
    std::vector<double> input_gradient(std::span<const double> input, std::size_t label) const;

    const VideoShape& input_shape() const noexcept { return input_shape_; }
    const RecognizerConfig& config() const noexcept { return config_; }
    int epochs_completed() const noexcept { return epochs_completed_; }
    std::span<const ParameterTensor> parameters() const noexcept { return params_; }

    Checkpoint to_checkpoint() const;

private:
    struct Activations;

    ConvVideoClassifier(LabelVocabulary vocabulary, VideoShape input_shape, RecognizerConfig config);

    void check_input(std::size_t size) const;
    template <typename T>
    std::vector<double> pool_input(std::span<const T> input) const;
    Activations forward(std::vector<double> pooled) const;
    std::vector<double> backward(const Activations& act, std::size_t label, std::vector<std::vector<double>>* param_grads,
                                 bool want_input_grad) const;
    std::vector<double> unpool_gradient(const std::vector<double>& pooled_grad) const;

    LabelVocabulary vocabulary_;
    VideoShape input_shape_;
    RecognizerConfig config_;
    std::size_t pooled_h_ = 0;
    std::size_t pooled_w_ = 0;
    std::size_t feature_count_ = 0;
    std::vector<ParameterTensor> params_;  // conv.weight, conv.bias, head.weight, head.bias
    std::vector<AdamSlot> optimizer_;
    std::int64_t optimizer_step_ = 0;
    int epochs_completed_ = 0;
};

/// initialize + train(config.epochs). Rejects datasets with fewer than two
/// populated classes or classes below config.min_clips_per_class.
ConvVideoClassifier train_recognizer(const Dataset& dataset, const RecognizerConfig& config);

/// Fraction of clips whose argmax prediction equals the label.
double clip_accuracy(const Recognizer& model, const Dataset& dataset);

}  // namespace vlad
