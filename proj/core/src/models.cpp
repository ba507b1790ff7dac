#include "vlad/models.hpp"

#include "vlad/error.hpp"

#include <cmath>

namespace vlad {

std::vector<std::size_t> sample_frame_indices(std::size_t total_frames, std::size_t n)
{
    if (total_frames == 0) {
        throw validation_error("cannot sample frames from an empty video");
    }
    if (n == 0) {
        throw validation_error("frame sample count must be at least 1");
    }
    std::vector<std::size_t> indices(n, 0);
    if (n == 1) {
        return indices;
    }
    const double span = static_cast<double>(total_frames - 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = static_cast<double>(k) * span / static_cast<double>(n - 1);
        indices[k] = static_cast<std::size_t>(std::lround(pos));
    }
    return indices;
}

VideoTensor sample_frames(const VideoTensor& video, std::size_t n)
{
    const auto indices = sample_frame_indices(video.shape().frames, n);
    return video.select_frames(indices);
}

ClassProbabilities context_pipeline(const VideoTensor& video,
                                    const FrameLabelScorer& scorer,
                                    const LabelVocabulary& vocabulary,
                                    std::size_t n_frames)
{
    const VideoTensor frames = sample_frames(video, n_frames);
    const SimilarityMatrix s = scorer.similarity(frames, vocabulary);
    if (s.frame_count() != frames.shape().frames || s.label_count() != vocabulary.size()) {
        throw model_error("scorer returned a " + std::to_string(s.frame_count()) + "x" +
                          std::to_string(s.label_count()) + " similarity matrix, expected " +
                          std::to_string(frames.shape().frames) + "x" + std::to_string(vocabulary.size()));
    }
    return context_probabilities(average_similarity(s), vocabulary.id());
}

ClassProbabilities checked_predict(const Recognizer& model, const VideoTensor& video)
{
    ClassProbabilities p = model.predict(video);
    if (p.size() != model.vocabulary().size()) {
        throw model_error("recognizer returned " + std::to_string(p.size()) + " probabilities for a vocabulary of " +
                          std::to_string(model.vocabulary().size()));
    }
    if (!p.vocabulary_id().empty() && p.vocabulary_id() != model.vocabulary().id()) {
        throw model_error("recognizer output references vocabulary '" + p.vocabulary_id() + "', expected '" +
                          model.vocabulary().id() + "'");
    }
    return p;
}

}  // namespace vlad
