#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vlad {

struct VideoShape {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;

    std::size_t frame_size() const noexcept { return height * width * channels; }
    std::size_t size() const noexcept { return frames * frame_size(); }

    friend bool operator==(const VideoShape&, const VideoShape&) = default;
};

std::string to_string(const VideoShape& shape);

/// A clip stored as N x H x W x C intensities in [0,1], frame-major then
/// row-major with interleaved channels.
class VideoTensor {
public:
    /// Throws a validation error unless N >= 1, C in {1,3}, the buffer size
    /// matches the shape and every intensity lies in [0,1].
    VideoTensor(VideoShape shape, std::vector<float> data, std::string video_id, double frame_rate = 25.0);

    static VideoTensor filled(VideoShape shape, float value, std::string video_id);

    const VideoShape& shape() const noexcept { return shape_; }
    const std::string& video_id() const noexcept { return video_id_; }
    double frame_rate() const noexcept { return frame_rate_; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> frame(std::size_t n) const;

    std::size_t offset(std::size_t n, std::size_t y, std::size_t x, std::size_t c) const noexcept
    {
        return ((n * shape_.height + y) * shape_.width + x) * shape_.channels + c;
    }
    float at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) const noexcept
    {
        return data_[offset(n, y, x, c)];
    }

    /// Same id and metadata, new intensities (validated).
    VideoTensor with_data(std::vector<float> data) const;
    VideoTensor with_id(std::string video_id) const;

    /// Frames at `indices`, in the given order.
    VideoTensor select_frames(std::span<const std::size_t> indices) const;

    friend bool operator==(const VideoTensor&, const VideoTensor&) = default;

private:
    VideoShape shape_;
    std::vector<float> data_;
    std::string video_id_;
    double frame_rate_;
};

/// Ordered, unique class labels. Every probability vector and similarity
/// matrix is indexed in this order.
class LabelVocabulary {
public:
    LabelVocabulary() = default;
    LabelVocabulary(std::vector<std::string> labels, std::string vocabulary_id);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& id() const noexcept { return id_; }
    std::optional<std::size_t> index_of(const std::string& label) const;

    friend bool operator==(const LabelVocabulary&, const LabelVocabulary&) = default;

private:
    std::vector<std::string> labels_;
    std::string id_;
};

struct LabeledClip {
    VideoTensor video;
    std::size_t label;
};

struct Dataset {
    LabelVocabulary vocabulary;
    std::vector<LabeledClip> clips;

    std::vector<std::size_t> class_counts() const;
};

}  // namespace vlad
