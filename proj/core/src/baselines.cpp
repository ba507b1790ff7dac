#include "vlad/baselines.hpp"

#include "vlad/error.hpp"

#include <opencv2/imgproc.hpp>
#include <opencv2/video/tracking.hpp>

#include <algorithm>
#include <numeric>
#include <random>

namespace vlad {

namespace {

void require_three_frames(const VideoTensor& video)
{
    if (video.shape().frames < 3) {
        throw validation_error("pseudo frames need at least 3 frames, clip '" + video.video_id() + "' has " +
                               std::to_string(video.shape().frames));
    }
}

cv::Mat frame_as_mat(const VideoTensor& video, std::size_t n)
{
    const auto& s = video.shape();
    auto f = video.frame(n);
    cv::Mat m(static_cast<int>(s.height), static_cast<int>(s.width), CV_32FC(static_cast<int>(s.channels)),
              const_cast<float*>(f.data()));
    return m.clone();
}

cv::Mat gray_u8(const cv::Mat& frame)
{
    cv::Mat gray;
    if (frame.channels() == 3) {
        cv::cvtColor(frame, gray, cv::COLOR_RGB2GRAY);
    } else {
        gray = frame;
    }
    cv::Mat out;
    gray.convertTo(out, CV_8U, 255.0);
    return out;
}

}  // namespace

VideoTensor NeighborMeanPredictor::predict_frames(const VideoTensor& video) const
{
    require_three_frames(video);
    const auto& s = video.shape();
    const std::size_t fs = s.frame_size();
    const auto x = video.data();
    std::vector<float> out(x.begin(), x.end());
    for (std::size_t n = 1; n + 1 < s.frames; ++n) {
        for (std::size_t i = 0; i < fs; ++i) {
            out[n * fs + i] = 0.5f * (x[(n - 1) * fs + i] + x[(n + 1) * fs + i]);
        }
    }
    return video.with_data(std::move(out));
}

VideoTensor FlowWarpPredictor::predict_frames(const VideoTensor& video) const
{
    require_three_frames(video);
    const auto& s = video.shape();
    const std::size_t fs = s.frame_size();
    std::vector<float> out(video.data().begin(), video.data().end());
    const int h = static_cast<int>(s.height);
    const int w = static_cast<int>(s.width);
    for (std::size_t n = 1; n + 1 < s.frames; ++n) {
        const cv::Mat prev = frame_as_mat(video, n - 1);
        const cv::Mat next = frame_as_mat(video, n + 1);
        cv::Mat flow;
        cv::calcOpticalFlowFarneback(gray_u8(prev), gray_u8(next), flow, 0.5, 3, 9, 3, 5, 1.1, 0);
        cv::Mat map_prev_x(h, w, CV_32F), map_prev_y(h, w, CV_32F);
        cv::Mat map_next_x(h, w, CV_32F), map_next_y(h, w, CV_32F);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const auto f = flow.at<cv::Point2f>(y, x);
                map_prev_x.at<float>(y, x) = static_cast<float>(x) - 0.5f * f.x;
                map_prev_y.at<float>(y, x) = static_cast<float>(y) - 0.5f * f.y;
                map_next_x.at<float>(y, x) = static_cast<float>(x) + 0.5f * f.x;
                map_next_y.at<float>(y, x) = static_cast<float>(y) + 0.5f * f.y;
            }
        }
        cv::Mat warped_prev, warped_next;
        cv::remap(prev, warped_prev, map_prev_x, map_prev_y, cv::INTER_LINEAR, cv::BORDER_REPLICATE);
        cv::remap(next, warped_next, map_next_x, map_next_y, cv::INTER_LINEAR, cv::BORDER_REPLICATE);
        cv::Mat mid = 0.5 * (warped_prev + warped_next);
        const float* src = mid.ptr<float>(0);
        for (std::size_t i = 0; i < fs; ++i) out[n * fs + i] = std::clamp(src[i], 0.0f, 1.0f);
    }
    return video.with_data(std::move(out));
}

std::unique_ptr<FramePredictor> make_frame_predictor(PseudoFrameMethod method)
{
    switch (method) {
    case PseudoFrameMethod::neighbor_mean: return std::make_unique<NeighborMeanPredictor>();
    case PseudoFrameMethod::flow_warp: return std::make_unique<FlowWarpPredictor>();
    }
    throw validation_error("unknown pseudo-frame method");
}

VideoTensor pseudo_frames(const VideoTensor& video, PseudoFrameMethod method)
{
    return make_frame_predictor(method)->predict_frames(video);
}

DetectionScore advit_score(const Recognizer& model, const VideoTensor& video, const FramePredictor& predictor)
{
    const auto original = checked_predict(model, video);
    const auto pseudo = checked_predict(model, predictor.predict_frames(video));
    return {symmetric_kl(original, pseudo), ScoreVariant::advit};
}

DetectionScore advit_score(const Recognizer& model, const VideoTensor& video, PseudoFrameMethod method)
{
    return advit_score(model, video, *make_frame_predictor(method));
}

std::vector<std::size_t> frame_permutation(std::size_t frames, std::uint64_t seed)
{
    std::vector<std::size_t> order(frames);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

DetectionScore shuffle_score(const Recognizer& model, const VideoTensor& video, std::uint64_t seed, int repeats)
{
    if (video.shape().frames < 2) {
        throw validation_error("shuffle score needs at least 2 frames, clip '" + video.video_id() + "' has 1");
    }
    if (repeats < 1) {
        throw validation_error("shuffle repeats must be at least 1");
    }
    const auto original = checked_predict(model, video);
    std::mt19937_64 seeds(seed);
    double total = 0.0;
    for (int r = 0; r < repeats; ++r) {
        const std::uint64_t draw_seed = r == 0 ? seed : seeds();
        const auto order = frame_permutation(video.shape().frames, draw_seed);
        total += symmetric_kl(original, checked_predict(model, video.select_frames(order)));
    }
    return {total / repeats, ScoreVariant::shuffle};
}

}  // namespace vlad
