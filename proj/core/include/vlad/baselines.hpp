#pragma once

// Comparison detectors reduced to the same symmetric-KL statistic as VLAD,
// so they run through the identical calibration and evaluation path.

#include "vlad/detector.hpp"
#include "vlad/models.hpp"

#include <cstdint>
#include <memory>

namespace vlad {

/// Predicts frame i of a clip from its temporal neighbours.
class FramePredictor {
public:
    virtual ~FramePredictor() = default;
    /// Same shape as the input; requires N >= 3.
    virtual VideoTensor predict_frames(const VideoTensor& video) const = 0;
};

/// Frame i becomes the mean of frames i-1 and i+1; endpoints are copied.
class NeighborMeanPredictor final : public FramePredictor {
public:
    VideoTensor predict_frames(const VideoTensor& video) const override;
};

/// Dense optical flow (Farneback) from frame i-1 to i+1; frame i is the mean
/// of both neighbours warped half-way along the flow. Endpoints are copied.
class FlowWarpPredictor final : public FramePredictor {
public:
    VideoTensor predict_frames(const VideoTensor& video) const override;
};

enum class PseudoFrameMethod { neighbor_mean, flow_warp };

std::unique_ptr<FramePredictor> make_frame_predictor(PseudoFrameMethod method);

VideoTensor pseudo_frames(const VideoTensor& video, PseudoFrameMethod method = PseudoFrameMethod::neighbor_mean);

/// symmetric_kl(predict(X), predict(pseudo_frames(X))).
DetectionScore advit_score(const Recognizer& model,
                           const VideoTensor& video,
                           PseudoFrameMethod method = PseudoFrameMethod::neighbor_mean);
DetectionScore advit_score(const Recognizer& model, const VideoTensor& video, const FramePredictor& predictor);

/// Uniform random frame permutation drawn from `seed`.
std::vector<std::size_t> frame_permutation(std::size_t frames, std::uint64_t seed);

/// symmetric_kl(predict(X), predict(permute(X))), averaged over `repeats`
/// permutations drawn from one seeded stream. Requires N >= 2.
DetectionScore shuffle_score(const Recognizer& model, const VideoTensor& video, std::uint64_t seed, int repeats = 1);

}  // namespace vlad
