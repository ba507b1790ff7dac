#pragma once

#include "vlad/video.hpp"

#include <filesystem>

namespace vlad {

/// Extension of the native lossless clip container.
inline constexpr const char* kTensorExtension = ".vt";

/// Writes the native container: magic "VLADVT01", id, frame rate, shape,
/// float32 intensities (little-endian).
void save_video_tensor(const std::filesystem::path& path, const VideoTensor& video);
VideoTensor load_video_tensor(const std::filesystem::path& path);

/// Encodes 8-bit frames through OpenCV. The codec follows the extension:
/// ".avi"/".mkv" use lossless FFV1, ".mp4" uses mp4v. A directory path
/// receives a PNG sequence frame_0000.png, frame_0001.png, ...
void write_video_file(const std::filesystem::path& path, const VideoTensor& video);

/// Decodes a clip, resizes each frame to target_h x target_w (area
/// interpolation) and scales intensities to [0,1]. Accepts the native
/// container, any container OpenCV can decode, or a directory of image
/// frames (sorted by name). Grayscale sources yield C = 1: image frames that
/// decode to one channel, or video whose decoded channels are identical in
/// every frame. Errors name the path.
VideoTensor load_video(const std::filesystem::path& path, std::size_t target_h, std::size_t target_w);

}  // namespace vlad
