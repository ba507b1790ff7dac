#include "vlad/fps.hpp"

#include "vlad/error.hpp"

#include <chrono>
#include <fstream>
#include <thread>

namespace vlad {

FpsReport measure_fps(const ClipPipeline& pipeline,
                      std::span<const VideoTensor> stream,
                      std::size_t warmup_clips,
                      std::size_t measured_clips,
                      std::string config_digest)
{
    if (stream.empty()) throw validation_error("fps measurement needs a non-empty clip stream");
    if (measured_clips < 1) throw validation_error("measured_clips must be at least 1");

    std::size_t cursor = 0;
    auto next = [&]() -> const VideoTensor& {
        const VideoTensor& clip = stream[cursor];
        cursor = (cursor + 1) % stream.size();
        return clip;
    };
    for (std::size_t i = 0; i < warmup_clips; ++i) pipeline(next());

    FpsReport report;
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    for (std::size_t i = 0; i < measured_clips; ++i) {
        const VideoTensor& clip = next();
        pipeline(clip);
        report.frames += clip.shape().frames;
    }
    report.seconds = std::chrono::duration<double>(clock::now() - start).count();
    report.clips = measured_clips;
    report.hardware = hardware_description();
    report.config_digest = std::move(config_digest);
    if (!(report.seconds > 0.0)) throw validation_error("fps measurement window has zero duration");
    report.fps = static_cast<double>(report.frames) / report.seconds;
    return report;
}

std::string hardware_description()
{
    std::string model;
    std::ifstream cpuinfo("/proc/cpuinfo");
    for (std::string line; std::getline(cpuinfo, line);) {
        if (line.rfind("model name", 0) == 0) {
            if (auto colon = line.find(':'); colon != std::string::npos) {
                model = line.substr(colon + 1);
                model.erase(0, model.find_first_not_of(' '));
            }
            break;
        }
    }
    if (model.empty()) model = "unknown";
    return model + " (" + std::to_string(std::thread::hardware_concurrency()) + " threads)";
}

}  // namespace vlad
