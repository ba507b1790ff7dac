#pragma once

// Contracts for the two modalities the detector compares: a video action
// recognizer and a frame-label vision-language scorer. External models plug
// in by implementing these interfaces.

#include "vlad/detector.hpp"
#include "vlad/video.hpp"

#include <cstddef>
#include <vector>

namespace vlad {

class Recognizer {
public:
    virtual ~Recognizer() = default;

    /// Class distribution over vocabulary(); must be safe to call concurrently.
    virtual ClassProbabilities predict(const VideoTensor& video) const = 0;

    /// Gradient of the cross-entropy loss for `label` with respect to every
    /// input intensity; same element count and layout as `video`.
    virtual std::vector<double> loss_gradient(const VideoTensor& video, std::size_t label) const = 0;

    /// False for black-box adapters; attacks refuse such models.
    virtual bool has_gradient() const { return true; }

    virtual const LabelVocabulary& vocabulary() const = 0;
};

class FrameLabelScorer {
public:
    virtual ~FrameLabelScorer() = default;

    /// One row per frame of `frames`, one column per label of `vocabulary`.
    virtual SimilarityMatrix similarity(const VideoTensor& frames, const LabelVocabulary& vocabulary) const = 0;
};

/// Rounded linear spacing over [0, total-1], both endpoints included.
/// n == 1 selects frame 0. Repeats appear when total < n.
std::vector<std::size_t> sample_frame_indices(std::size_t total_frames, std::size_t n);

VideoTensor sample_frames(const VideoTensor& video, std::size_t n);

/// sample_frames -> similarity -> average_similarity -> context_probabilities.
ClassProbabilities context_pipeline(const VideoTensor& video,
                                    const FrameLabelScorer& scorer,
                                    const LabelVocabulary& vocabulary,
                                    std::size_t n_frames);

/// Checks the recognizer output against its vocabulary before returning it.
ClassProbabilities checked_predict(const Recognizer& model, const VideoTensor& video);

}  // namespace vlad
