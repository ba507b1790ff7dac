#pragma once

#include "vlad/video.hpp"

#include <functional>
#include <span>
#include <string>

namespace vlad {

struct FpsReport {
    std::string hardware;
    double fps = 0.0;
    std::size_t clips = 0;   ///< clips in the measured window
    std::size_t frames = 0;  ///< frames in the measured window
    double seconds = 0.0;
    std::string config_digest;

    friend bool operator==(const FpsReport&, const FpsReport&) = default;
};

using ClipPipeline = std::function<void(const VideoTensor&)>;

/// Runs `warmup_clips` untimed, then times `measured_clips` sequential calls
/// on a monotonic clock. The stream is cycled if it is shorter than needed.
FpsReport measure_fps(const ClipPipeline& pipeline,
                      std::span<const VideoTensor> stream,
                      std::size_t warmup_clips,
                      std::size_t measured_clips,
                      std::string config_digest = {});

/// CPU model name and logical core count, or "unknown".
std::string hardware_description();

}  // namespace vlad
