#include "vlad/video.hpp"

#include "vlad/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace vlad {

std::string to_string(const VideoShape& s)
{
    return std::to_string(s.frames) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
           std::to_string(s.channels);
}

VideoTensor::VideoTensor(VideoShape shape, std::vector<float> data, std::string video_id, double frame_rate)
    : shape_(shape), data_(std::move(data)), video_id_(std::move(video_id)), frame_rate_(frame_rate)
{
    if (shape_.frames < 1 || shape_.height < 1 || shape_.width < 1) {
        throw validation_error("video '" + video_id_ + "': empty shape " + to_string(shape_));
    }
    if (shape_.channels != 1 && shape_.channels != 3) {
        throw validation_error("video '" + video_id_ + "': channels must be 1 or 3, got " +
                               std::to_string(shape_.channels));
    }
    if (data_.size() != shape_.size()) {
        throw validation_error("video '" + video_id_ + "': buffer has " + std::to_string(data_.size()) +
                               " values, shape " + to_string(shape_) + " needs " + std::to_string(shape_.size()));
    }
    const bool in_range = std::all_of(data_.begin(), data_.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
    if (!in_range) {
        throw validation_error("video '" + video_id_ + "': intensities must lie in [0,1]");
    }
}

VideoTensor VideoTensor::filled(VideoShape shape, float value, std::string video_id)
{
    return VideoTensor(shape, std::vector<float>(shape.size(), value), std::move(video_id));
}

std::span<const float> VideoTensor::frame(std::size_t n) const
{
    if (n >= shape_.frames) {
        throw validation_error("frame index " + std::to_string(n) + " out of range for " + to_string(shape_));
    }
    return std::span<const float>(data_).subspan(n * shape_.frame_size(), shape_.frame_size());
}

VideoTensor VideoTensor::with_data(std::vector<float> data) const
{
    return VideoTensor(shape_, std::move(data), video_id_, frame_rate_);
}

VideoTensor VideoTensor::with_id(std::string video_id) const
{
    VideoTensor out = *this;
    out.video_id_ = std::move(video_id);
    return out;
}

VideoTensor VideoTensor::select_frames(std::span<const std::size_t> indices) const
{
    if (indices.empty()) {
        throw validation_error("select_frames: no frame indices");
    }
    std::vector<float> out;
    out.reserve(indices.size() * shape_.frame_size());
    for (std::size_t idx : indices) {
        auto f = frame(idx);
        out.insert(out.end(), f.begin(), f.end());
    }
    VideoShape shape = shape_;
    shape.frames = indices.size();
    return VideoTensor(shape, std::move(out), video_id_, frame_rate_);
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels, std::string vocabulary_id)
    : labels_(std::move(labels)), id_(std::move(vocabulary_id))
{
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
        if (l.empty()) {
            throw validation_error("vocabulary '" + id_ + "': empty label");
        }
        if (!seen.insert(l).second) {
            throw validation_error("vocabulary '" + id_ + "': duplicate label '" + l + "'");
        }
    }
}

std::optional<std::size_t> LabelVocabulary::index_of(const std::string& label) const
{
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<std::size_t> Dataset::class_counts() const
{
    std::vector<std::size_t> counts(vocabulary.size(), 0);
    for (const auto& clip : clips) {
        if (clip.label >= counts.size()) {
            throw validation_error("clip '" + clip.video.video_id() + "' has label index " +
                                   std::to_string(clip.label) + " outside the vocabulary");
        }
        ++counts[clip.label];
    }
    return counts;
}

}  // namespace vlad
