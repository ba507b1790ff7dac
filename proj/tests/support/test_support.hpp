#pragma once
// Small fixtures shared by the unit and acceptance tests.

#include "vlad/conv_video_classifier.hpp"
#include "vlad/datagen.hpp"
#include "vlad/detector.hpp"
#include "vlad/models.hpp"
#include "vlad/nn_ops.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace vlad::testing {

// logits = W x + b over the raw intensities. Smooth, cheap, and with an exact
// gradient, so attack tests do not depend on a trained network.
class LinearRecognizer final : public Recognizer {
public:
    LinearRecognizer(LabelVocabulary vocab, VideoShape shape, std::uint64_t seed, double scale = 0.05)
        : vocab_(std::move(vocab)), shape_(shape), w_(vocab_.size() * shape.size()), b_(vocab_.size(), 0.0)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, scale);
        for (double& v : w_) v = nd(rng);
    }

    std::vector<double> logits(const VideoTensor& x) const
    {
        std::vector<double> z(b_);
        const auto data = x.data();
        for (std::size_t m = 0; m < z.size(); ++m) {
            const double* row = w_.data() + m * shape_.size();
            for (std::size_t i = 0; i < data.size(); ++i) z[m] += row[i] * data[i];
        }
        return z;
    }

    ClassProbabilities predict(const VideoTensor& x) const override
    {
        return ClassProbabilities(softmax(logits(x)), vocab_.id());
    }

    std::vector<double> loss_gradient(const VideoTensor& x, std::size_t label) const override
    {
        auto p = softmax(logits(x));
        p[label] -= 1.0;
        std::vector<double> g(shape_.size(), 0.0);
        for (std::size_t m = 0; m < p.size(); ++m) {
            const double* row = w_.data() + m * shape_.size();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += p[m] * row[i];
        }
        return g;
    }

    const LabelVocabulary& vocabulary() const override { return vocab_; }

    // Shifts the bias so `video` is classified as `label` with a clear margin.
    void favour(const VideoTensor& video, std::size_t label, double margin = 0.5)
    {
        const auto z = logits(video);
        double top = -1e300;
        for (std::size_t m = 0; m < z.size(); ++m) {
            if (m != label) top = std::max(top, z[m]);
        }
        b_[label] += std::max(0.0, top - z[label]) + margin;
    }

private:
    LabelVocabulary vocab_;
    VideoShape shape_;
    std::vector<double> w_;
    std::vector<double> b_;
};

// Gradient-free recognizer that ignores its input.
class ConstantRecognizer final : public Recognizer {
public:
    ConstantRecognizer(LabelVocabulary vocab, std::vector<double> probs) : vocab_(std::move(vocab)), probs_(std::move(probs)) {}
    ClassProbabilities predict(const VideoTensor&) const override { return ClassProbabilities(probs_, vocab_.id()); }
    std::vector<double> loss_gradient(const VideoTensor&, std::size_t) const override { return {}; }
    bool has_gradient() const override { return false; }
    const LabelVocabulary& vocabulary() const override { return vocab_; }

private:
    LabelVocabulary vocab_;
    std::vector<double> probs_;
};

// Mean intensity of every frame fed through a fixed linear map: invariant to
// the order of frames.
class FrameAverageRecognizer final : public Recognizer {
public:
    explicit FrameAverageRecognizer(LabelVocabulary vocab) : vocab_(std::move(vocab)) {}
    ClassProbabilities predict(const VideoTensor& x) const override
    {
        const auto s = x.shape();
        std::vector<double> per_channel(s.channels, 0.0);
        const auto d = x.data();
        for (std::size_t i = 0; i < d.size(); ++i) per_channel[i % s.channels] += d[i];
        std::vector<double> z(vocab_.size(), 0.0);
        for (std::size_t m = 0; m < z.size(); ++m) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                z[m] += std::sin(1.0 + static_cast<double>(m * 7 + c)) * per_channel[c] / static_cast<double>(d.size());
            }
        }
        return ClassProbabilities(softmax(z), vocab_.id());
    }
    std::vector<double> loss_gradient(const VideoTensor&, std::size_t) const override { return {}; }
    bool has_gradient() const override { return false; }
    const LabelVocabulary& vocabulary() const override { return vocab_; }

private:
    LabelVocabulary vocab_;
};

// Returns the same similarity row for every frame.
class FixedRowScorer final : public FrameLabelScorer {
public:
    explicit FixedRowScorer(std::vector<double> row) : row_(std::move(row)) {}
    SimilarityMatrix similarity(const VideoTensor& frames, const LabelVocabulary& vocab) const override
    {
        std::vector<double> values;
        for (std::size_t n = 0; n < frames.shape().frames; ++n) values.insert(values.end(), row_.begin(), row_.end());
        (void)vocab;
        return SimilarityMatrix(frames.shape().frames, row_.size(), values);
    }

private:
    std::vector<double> row_;
};

inline SyntheticConfig tiny_config(std::size_t classes = 3, std::size_t per_class = 6)
{
    SyntheticConfig c;
    c.n_classes = classes;
    c.clips_per_class = per_class;
    c.n_frames = 8;
    c.height = 16;
    c.width = 16;
    c.seed = 5;
    c.id_prefix = "tiny";
    return c;
}

inline std::vector<double> random_simplex(std::size_t m, std::mt19937_64& rng)
{
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> p(m);
    double sum = 0.0;
    for (double& v : p) sum += (v = ex(rng));
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace vlad::testing
