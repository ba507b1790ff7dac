#include "vlad/video_io.hpp"

#include "vlad/error.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <fstream>

namespace vlad {

namespace {

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'V', 'L', 'A', 'D', 'V', 'T', '0', '1'};

template <typename T>
void put(std::ofstream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw io_error("'" + path.string() + "': truncated clip file");
    return v;
}

cv::Mat to_8u_bgr(const VideoTensor& video, std::size_t n)
{
    const auto& s = video.shape();
    auto f = video.frame(n);
    cv::Mat m(static_cast<int>(s.height), static_cast<int>(s.width), CV_32FC(static_cast<int>(s.channels)),
              const_cast<float*>(f.data()));
    cv::Mat u8;
    m.convertTo(u8, CV_8U, 255.0);
    if (s.channels == 3) cv::cvtColor(u8, u8, cv::COLOR_RGB2BGR);
    return u8;
}

struct DecodedFrames {
    std::vector<cv::Mat> frames;  // 8-bit or 16-bit, 1 or 3 channels (BGR)
    double fps = 25.0;
};

DecodedFrames decode_image_directory(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    DecodedFrames out;
    for (const auto& f : files) {
        cv::Mat img = cv::imread(f.string(), cv::IMREAD_ANYCOLOR | cv::IMREAD_ANYDEPTH);
        if (img.empty()) continue;
        if (img.channels() == 4) cv::cvtColor(img, img, cv::COLOR_BGRA2BGR);
        out.frames.push_back(img);
    }
    return out;
}

DecodedFrames decode_container(const std::filesystem::path& path)
{
    cv::VideoCapture cap(path.string());
    if (!cap.isOpened()) {
        throw io_error("'" + path.string() + "': cannot open video container");
    }
    DecodedFrames out;
    const double fps = cap.get(cv::CAP_PROP_FPS);
    if (fps > 0.0) out.fps = fps;
    cv::Mat frame;
    while (cap.read(frame)) {
        if (frame.empty()) break;
        out.frames.push_back(frame.clone());
    }
    // Video decoders always hand back three channels; collapse when the source was gray.
    const bool gray = !out.frames.empty() && std::all_of(out.frames.begin(), out.frames.end(), [](const cv::Mat& f) {
        if (f.channels() != 3) return false;
        std::vector<cv::Mat> planes;
        cv::split(f, planes);
        return cv::countNonZero(planes[0] != planes[1]) == 0 && cv::countNonZero(planes[1] != planes[2]) == 0;
    });
    if (gray) {
        for (auto& f : out.frames) cv::extractChannel(f, f, 0);
    }
    return out;
}

}  // namespace

void save_video_tensor(const std::filesystem::path& path, const VideoTensor& video)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(video.video_id().size()));
    out.write(video.video_id().data(), static_cast<std::streamsize>(video.video_id().size()));
    put<double>(out, video.frame_rate());
    const auto& s = video.shape();
    for (auto d : {s.frames, s.height, s.width, s.channels}) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(video.data().data()),
              static_cast<std::streamsize>(video.data().size() * sizeof(float)));
    if (!out) throw io_error("failed writing '" + path.string() + "'");
}

VideoTensor load_video_tensor(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open clip '" + path.string() + "'");
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw io_error("'" + path.string() + "' is not a clip tensor file");
    const auto id_len = get<std::uint32_t>(in, path);
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    const auto fps = get<double>(in, path);
    VideoShape s;
    s.frames = get<std::uint64_t>(in, path);
    s.height = get<std::uint64_t>(in, path);
    s.width = get<std::uint64_t>(in, path);
    s.channels = get<std::uint64_t>(in, path);
    if (s.frames == 0) throw io_error("'" + path.string() + "': clip has zero frames");
    std::vector<float> data(s.size());
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!in) throw io_error("'" + path.string() + "': truncated clip data");
    try {
        return VideoTensor(s, std::move(data), std::move(id), fps);
    } catch (const Error& e) {
        throw io_error("'" + path.string() + "': " + e.what());
    }
}

void write_video_file(const std::filesystem::path& path, const VideoTensor& video)
{
    const auto& s = video.shape();
    if (path.extension().empty()) {
        std::filesystem::create_directories(path);
        for (std::size_t n = 0; n < s.frames; ++n) {
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%04zu.png", n);
            if (!cv::imwrite((path / name).string(), to_8u_bgr(video, n))) {
                throw io_error("'" + (path / name).string() + "': cannot write frame");
            }
        }
        return;
    }
    const auto ext = path.extension().string();
    const int fourcc = ext == ".mp4" ? cv::VideoWriter::fourcc('m', 'p', '4', 'v')
                                     : cv::VideoWriter::fourcc('F', 'F', 'V', '1');
    cv::VideoWriter writer(path.string(), fourcc, video.frame_rate(),
                           cv::Size(static_cast<int>(s.width), static_cast<int>(s.height)), s.channels == 3);
    if (!writer.isOpened()) throw io_error("'" + path.string() + "': cannot open video writer");
    for (std::size_t n = 0; n < s.frames; ++n) writer.write(to_8u_bgr(video, n));
}

VideoTensor load_video(const std::filesystem::path& path, std::size_t target_h, std::size_t target_w)
{
    if (target_h == 0 || target_w == 0) {
        throw validation_error("target resolution must be positive");
    }
    if (!std::filesystem::exists(path)) {
        throw io_error("'" + path.string() + "': no such file or directory");
    }
    const std::string id = path.stem().string();

    if (path.extension() == kTensorExtension) {
        VideoTensor v = load_video_tensor(path);
        if (v.shape().height == target_h && v.shape().width == target_w) return v;
        const auto& s = v.shape();
        std::vector<float> data;
        data.reserve(s.frames * target_h * target_w * s.channels);
        for (std::size_t n = 0; n < s.frames; ++n) {
            auto f = v.frame(n);
            cv::Mat m(static_cast<int>(s.height), static_cast<int>(s.width), CV_32FC(static_cast<int>(s.channels)),
                      const_cast<float*>(f.data()));
            cv::Mat r;
            cv::resize(m, r, cv::Size(static_cast<int>(target_w), static_cast<int>(target_h)), 0, 0, cv::INTER_AREA);
            const float* p = r.ptr<float>(0);
            for (std::size_t i = 0; i < target_h * target_w * s.channels; ++i) data.push_back(std::clamp(p[i], 0.0f, 1.0f));
        }
        return VideoTensor(VideoShape{s.frames, target_h, target_w, s.channels}, std::move(data), v.video_id(),
                           v.frame_rate());
    }

    DecodedFrames decoded;
    try {
        decoded = std::filesystem::is_directory(path) ? decode_image_directory(path) : decode_container(path);
    } catch (const cv::Exception& e) {
        throw io_error("'" + path.string() + "': decoder failed: " + e.what());
    }
    if (decoded.frames.empty()) {
        throw io_error("'" + path.string() + "': no decodable frames");
    }
    const int channels = decoded.frames.front().channels();
    if (channels != 1 && channels != 3) {
        throw io_error("'" + path.string() + "': unsupported channel count " + std::to_string(channels));
    }
    std::vector<float> data;
    data.reserve(decoded.frames.size() * target_h * target_w * static_cast<std::size_t>(channels));
    for (auto& frame : decoded.frames) {
        if (frame.channels() != channels) {
            throw io_error("'" + path.string() + "': frames disagree on channel count");
        }
        const double scale = frame.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
        cv::Mat f;
        frame.convertTo(f, CV_32F, scale);
        if (channels == 3) cv::cvtColor(f, f, cv::COLOR_BGR2RGB);
        if (f.rows != static_cast<int>(target_h) || f.cols != static_cast<int>(target_w)) {
            cv::resize(f, f, cv::Size(static_cast<int>(target_w), static_cast<int>(target_h)), 0, 0, cv::INTER_AREA);
        }
        if (!f.isContinuous()) f = f.clone();
        const float* p = f.ptr<float>(0);
        for (std::size_t i = 0; i < target_h * target_w * static_cast<std::size_t>(channels); ++i) {
            data.push_back(std::clamp(p[i], 0.0f, 1.0f));
        }
    }
    return VideoTensor(VideoShape{decoded.frames.size(), target_h, target_w, static_cast<std::size_t>(channels)},
                       std::move(data), id, decoded.fps);
}

}  // namespace vlad
