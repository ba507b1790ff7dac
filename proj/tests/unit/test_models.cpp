#include "test_support.hpp"

#include "vlad/checkpoint.hpp"
#include "vlad/conv_video_classifier.hpp"
#include "vlad/dual_encoder_scorer.hpp"
#include "vlad/error.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include <cmath>
#include <filesystem>
#include <set>

using namespace vlad;
using namespace vlad::testing;

namespace {

VideoTensor ramp_video(std::size_t frames, std::size_t h = 4, std::size_t w = 4, std::size_t c = 3)
{
    VideoShape s{frames, h, w, c};
    std::vector<float> d(s.size());
    for (std::size_t n = 0; n < frames; ++n) {
        for (std::size_t i = 0; i < s.frame_size(); ++i) d[n * s.frame_size() + i] = static_cast<float>(n) / 255.0f;
    }
    return VideoTensor(s, d, "ramp");
}

RecognizerConfig small_recognizer_config(int epochs)
{
    RecognizerConfig c;
    c.epochs = epochs;
    c.min_clips_per_class = 5;
    c.conv_channels = 4;
    c.temporal_segments = 2;
    c.spatial_cells = 2;
    return c;
}

ScorerConfig small_scorer_config(int epochs)
{
    ScorerConfig c;
    c.epochs = epochs;
    c.min_clips_per_class = 5;
    c.hidden = 16;
    c.embedding_dim = 8;
    return c;
}

}  // namespace

TEST(VideoTensor, Invariants)
{
    EXPECT_THROW(VideoTensor({0, 2, 2, 1}, {}, "x"), Error);
    EXPECT_THROW(VideoTensor({1, 2, 2, 2}, std::vector<float>(8, 0.f), "x"), Error);
    EXPECT_THROW(VideoTensor({1, 2, 2, 1}, std::vector<float>(3, 0.f), "x"), Error);
    EXPECT_THROW(VideoTensor({1, 2, 2, 1}, {0.f, 0.f, 1.5f, 0.f}, "x"), Error);
    EXPECT_NO_THROW(VideoTensor({1, 2, 2, 1}, {0.f, 1.f, 0.5f, 0.f}, "x"));
}

TEST(LabelVocabulary, UniqueNonEmpty)
{
    EXPECT_THROW(LabelVocabulary({"a", "a"}, "v"), Error);
    EXPECT_THROW(LabelVocabulary({"a", ""}, "v"), Error);
    const LabelVocabulary v({"a", "b"}, "v");
    EXPECT_EQ(v.index_of("b"), 1u);
    EXPECT_FALSE(v.index_of("c").has_value());
}

TEST(SampleFrames, FormulaOracle)
{
    for (auto [total, n] : {std::pair<std::size_t, std::size_t>{64, 32}, {32, 32}, {8, 32}, {16, 32}, {100, 7}, {5, 2}}) {
        const auto idx = sample_frame_indices(total, n);
        ASSERT_EQ(idx.size(), n);
        for (std::size_t k = 0; k < n; ++k) {
            const double exact = static_cast<double>(k) * static_cast<double>(total - 1) / static_cast<double>(n - 1);
            EXPECT_EQ(idx[k], static_cast<std::size_t>(std::llround(exact))) << total << "/" << n << " k=" << k;
        }
        EXPECT_EQ(idx.front(), 0u);
        EXPECT_EQ(idx.back(), total - 1);
        EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    }
}

TEST(SampleFrames, Examples)
{
    const auto id32 = sample_frame_indices(32, 32);
    for (std::size_t k = 0; k < 32; ++k) EXPECT_EQ(id32[k], k);
    const auto rep = sample_frame_indices(8, 32);
    EXPECT_TRUE(std::all_of(rep.begin(), rep.end(), [](std::size_t i) { return i < 8; }));
    EXPECT_EQ(sample_frame_indices(10, 1), std::vector<std::size_t>{0});
    EXPECT_THROW(sample_frame_indices(10, 0), Error);
    EXPECT_THROW(sample_frame_indices(0, 4), Error);

    const auto v = ramp_video(8);
    const auto s = sample_frames(v, 3);
    ASSERT_EQ(s.shape().frames, 3u);
    EXPECT_EQ(s.at(2, 0, 0, 0), v.at(7, 0, 0, 0));
    EXPECT_EQ(s.at(1, 0, 0, 0), v.at(4, 0, 0, 0));
}

TEST(ContextPipeline, IdenticalRowsGiveSoftmaxOfRow)
{
    const LabelVocabulary vocab({"a", "b", "c"}, "v");
    const std::vector<double> row{0.1, 1.2, -0.4};
    const FixedRowScorer scorer(row);
    const auto expected = context_probabilities(row);
    for (std::size_t frames : {1u, 5u}) {
        const auto pc = context_pipeline(ramp_video(frames), scorer, vocab, 32);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(pc[i], expected[i], 1e-12);
    }
}

TEST(ContextPipeline, ShapeMismatchIsRejected)
{
    const LabelVocabulary vocab({"a", "b", "c"}, "v");
    const FixedRowScorer scorer({0.1, 0.2});
    EXPECT_THROW(context_pipeline(ramp_video(3), scorer, vocab, 4), Error);
}

TEST(CheckedPredict, RejectsVocabularyMismatch)
{
    const ConstantRecognizer good(LabelVocabulary({"a", "b"}, "v"), {0.3, 0.7});
    EXPECT_NO_THROW(checked_predict(good, ramp_video(2)));
    const ConstantRecognizer bad(LabelVocabulary({"a", "b", "c"}, "v"), {0.3, 0.7});
    EXPECT_THROW(checked_predict(bad, ramp_video(2)), Error);
}

class ToyModels : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        auto cfg = tiny_config(3, 8);
        data_ = new Dataset(generate_synthetic_dataset(cfg));
    }
    static void TearDownTestSuite() { delete data_; }
    static Dataset* data_;
};
Dataset* ToyModels::data_ = nullptr;

TEST_F(ToyModels, UntrainedRecognizerIsUniform)
{
    const auto m = train_recognizer(*data_, small_recognizer_config(0));
    for (const auto& clip : data_->clips) {
        const auto p = m.predict(clip.video);
        for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
    }
}

TEST_F(ToyModels, RecognizerTrainingIsDeterministic)
{
    const auto a = train_recognizer(*data_, small_recognizer_config(3));
    const auto b = train_recognizer(*data_, small_recognizer_config(3));
    for (const auto& clip : data_->clips) EXPECT_EQ(a.predict(clip.video), b.predict(clip.video));
}

TEST_F(ToyModels, RecognizerResumeMatchesUninterrupted)
{
    const auto full = train_recognizer(*data_, small_recognizer_config(4));
    auto part = ConvVideoClassifier::initialize(data_->vocabulary, data_->clips[0].video.shape(), small_recognizer_config(4));
    part.train(*data_, 2);
    const auto path = std::filesystem::temp_directory_path() / "vlad_resume_test.ckpt";
    write_checkpoint(path, part.to_checkpoint());
    auto resumed = ConvVideoClassifier::from_checkpoint(read_checkpoint(path));
    std::filesystem::remove(path);
    resumed.train(*data_, 4);
    EXPECT_EQ(resumed.epochs_completed(), 4);
    for (const auto& clip : data_->clips) EXPECT_EQ(full.predict(clip.video), resumed.predict(clip.video));
}

TEST_F(ToyModels, RecognizerRejectsDegenerateData)
{
    Dataset one{data_->vocabulary, {}};
    for (const auto& c : data_->clips) {
        if (c.label == 0) one.clips.push_back(c);
    }
    EXPECT_THROW(train_recognizer(one, small_recognizer_config(1)), Error);
    auto strict = small_recognizer_config(1);
    strict.min_clips_per_class = 20;
    EXPECT_THROW(train_recognizer(*data_, strict), Error);
}

TEST_F(ToyModels, GradientMatchesCentralDifferences)
{
    const auto m = train_recognizer(*data_, small_recognizer_config(2));
    std::mt19937_64 rng(77);
    std::normal_distribution<double> nd;
    const auto& clip = data_->clips[5];
    std::vector<double> x(clip.video.data().begin(), clip.video.data().end());
    for (int probe = 0; probe < 5; ++probe) {
        std::vector<double> dir(x.size());
        for (double& v : dir) v = nd(rng);
        const auto g = m.input_gradient(x, clip.label);
        double analytic = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) analytic += g[i] * dir[i];
        const double h = 1e-4;
        std::vector<double> xp(x), xm(x);
        for (std::size_t i = 0; i < x.size(); ++i) {
            xp[i] += h * dir[i];
            xm[i] -= h * dir[i];
        }
        const double numeric = (m.loss(xp, clip.label) - m.loss(xm, clip.label)) / (2 * h);
        EXPECT_LE(std::abs(analytic - numeric), 1e-3 * std::max(std::abs(numeric), 1e-8));
    }
}

TEST_F(ToyModels, CheckpointRoundTripAndVersionCheck)
{
    const auto m = train_recognizer(*data_, small_recognizer_config(1));
    const auto path = std::filesystem::temp_directory_path() / "vlad_ckpt_test.ckpt";
    write_checkpoint(path, m.to_checkpoint());
    const auto ck = read_checkpoint(path);
    EXPECT_EQ(ck.contract_type, "recognizer");
    EXPECT_EQ(ck.vocabulary, data_->vocabulary);
    const auto back = ConvVideoClassifier::from_checkpoint(ck);
    for (const auto& clip : data_->clips) EXPECT_EQ(m.predict(clip.video), back.predict(clip.video));

    // Bump the major version byte and expect a refusal.
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char bumped = static_cast<char>(kCheckpointMajorVersion + 1);
    f.write(&bumped, 1);
    f.close();
    EXPECT_THROW(read_checkpoint(path), Error);
    std::filesystem::remove(path);
    EXPECT_THROW(read_checkpoint(path), Error);
}

TEST_F(ToyModels, ScorerContracts)
{
    const auto untrained = train_scorer(*data_, small_scorer_config(0));
    const auto& clip = data_->clips[0].video;
    const auto s = untrained.similarity(clip, data_->vocabulary);
    EXPECT_EQ(s.frame_count(), clip.shape().frames);
    EXPECT_EQ(s.label_count(), data_->vocabulary.size());
    const auto pc = context_pipeline(clip, untrained, data_->vocabulary, 8);
    for (double v : pc.values()) EXPECT_NEAR(v, 1.0 / 3.0, 0.05);

    const auto a = train_scorer(*data_, small_scorer_config(3));
    const auto b = train_scorer(*data_, small_scorer_config(3));
    EXPECT_EQ(a.similarity(clip, data_->vocabulary).values().size(), s.values().size());
    const auto sa = a.similarity(clip, data_->vocabulary);
    const auto sb = b.similarity(clip, data_->vocabulary);
    EXPECT_TRUE(std::equal(sa.values().begin(), sa.values().end(), sb.values().begin()));
    EXPECT_THROW(a.similarity(clip, LabelVocabulary({"unknown label", "other"}, "x")), Error);

    const auto path = std::filesystem::temp_directory_path() / "vlad_scorer_test.ckpt";
    write_checkpoint(path, a.to_checkpoint());
    const auto back = DualEncoderScorer::from_checkpoint(read_checkpoint(path));
    std::filesystem::remove(path);
    const auto sc = back.similarity(clip, data_->vocabulary);
    EXPECT_TRUE(std::equal(sa.values().begin(), sa.values().end(), sc.values().begin()));
}

TEST_F(ToyModels, ScorerTemperatureScalesSimilarities)
{
    auto a = train_scorer(*data_, small_scorer_config(2));
    const auto& clip = data_->clips[0].video;
    const auto s1 = a.similarity(clip, data_->vocabulary);
    a.set_temperature(2.0);
    const auto s2 = a.similarity(clip, data_->vocabulary);
    for (std::size_t i = 0; i < s1.values().size(); ++i) EXPECT_NEAR(s2.values()[i], s1.values()[i] / 2.0, 1e-12);
    EXPECT_THROW(a.set_temperature(0.0), Error);
}

TEST_F(ToyModels, ModalitiesShareNoParameters)
{
    const auto r = train_recognizer(*data_, small_recognizer_config(1));
    const auto s = train_scorer(*data_, small_scorer_config(1));
    std::set<const double*> rec_storage;
    std::set<std::string> rec_names;
    for (const auto& p : r.parameters()) {
        rec_storage.insert(p.values.data());
        rec_names.insert(p.name);
    }
    for (const auto& p : s.parameters()) {
        EXPECT_FALSE(rec_storage.count(p.values.data()));
        EXPECT_FALSE(rec_names.count(p.name)) << p.name;
    }
    EXPECT_NE(r.config().seed, s.config().seed);
}
