#include "test_support.hpp"

#include "vlad/datagen.hpp"
#include "vlad/error.hpp"
#include "vlad/manifest.hpp"
#include "vlad/video_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

using namespace vlad;
using namespace vlad::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("vlad_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::set<std::string> ids_of(const std::vector<LabeledClip>& clips)
{
    std::set<std::string> ids;
    for (const auto& c : clips) ids.insert(c.video.video_id());
    return ids;
}

Dataset labelled(std::size_t classes, std::size_t per_class)
{
    return generate_synthetic_dataset(tiny_config(classes, per_class));
}

}  // namespace

TEST(Synthetic, CountsShapesAndRange)
{
    const auto cfg = tiny_config(4, 3);
    const auto ds = generate_synthetic_dataset(cfg);
    ASSERT_EQ(ds.clips.size(), 12u);
    EXPECT_EQ(ds.vocabulary.size(), 4u);
    EXPECT_EQ(ds.class_counts(), (std::vector<std::size_t>{3, 3, 3, 3}));
    for (const auto& c : ds.clips) {
        EXPECT_EQ(c.video.shape(), (VideoShape{8, 16, 16, 3}));
        for (float v : c.video.data()) {
            ASSERT_GE(v, 0.0f);
            ASSERT_LE(v, 1.0f);
            // Quantised to the 2^-16 grid.
            ASSERT_EQ(std::round(v * 65536.0f) / 65536.0f, v);
        }
    }
    EXPECT_EQ(ids_of(ds.clips).size(), 12u);
}

TEST(Synthetic, DeterministicInSeed)
{
    auto cfg = tiny_config(3, 2);
    const auto a = generate_synthetic_dataset(cfg);
    const auto b = generate_synthetic_dataset(cfg);
    for (std::size_t i = 0; i < a.clips.size(); ++i) EXPECT_EQ(a.clips[i].video, b.clips[i].video);
    cfg.seed = 6;
    const auto c = generate_synthetic_dataset(cfg);
    bool differs = false;
    for (std::size_t i = 0; i < a.clips.size(); ++i) differs |= !std::equal(a.clips[i].video.data().begin(), a.clips[i].video.data().end(), c.clips[i].video.data().begin());
    EXPECT_TRUE(differs);
}

TEST(Synthetic, ClipDependsOnlyOnSeedLabelIndex)
{
    auto small = tiny_config(3, 2);
    auto large = tiny_config(5, 7);
    EXPECT_EQ(render_synthetic_clip(small, 2, 1).data().size(), render_synthetic_clip(large, 2, 1).data().size());
    const auto a = render_synthetic_clip(small, 2, 1);
    const auto b = render_synthetic_clip(large, 2, 1);
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(Synthetic, GrayscaleAndLabels)
{
    auto cfg = tiny_config(2, 1);
    cfg.channels = 1;
    const auto ds = generate_synthetic_dataset(cfg);
    EXPECT_EQ(ds.clips[0].video.shape().channels, 1u);
    const auto labels = synthetic_class_labels(max_synthetic_classes());
    EXPECT_EQ(std::set<std::string>(labels.begin(), labels.end()).size(), labels.size());
    EXPECT_EQ(labels[0], "square moving right");
}

TEST(Synthetic, ValidationNamesTheParameter)
{
    auto expect_message = [](SyntheticConfig c, const std::string& needle) {
        try {
            validate(c);
            ADD_FAILURE() << "expected a validation error mentioning " << needle;
        } catch (const Error& e) {
            EXPECT_EQ(e.category(), ErrorCategory::validation);
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    auto c = tiny_config();
    c.n_classes = 1;
    expect_message(c, "n_classes");
    c = tiny_config();
    c.n_classes = max_synthetic_classes() + 1;
    expect_message(c, "n_classes");
    c = tiny_config();
    c.clips_per_class = 0;
    expect_message(c, "clips_per_class");
    c = tiny_config();
    c.n_frames = 0;
    expect_message(c, "n_frames");
    c = tiny_config();
    c.height = 8;
    expect_message(c, "height");
    c = tiny_config();
    c.channels = 2;
    expect_message(c, "channels");
}

TEST(Split, FiveHundredClipsGiveFourHundredCalibration)
{
    // Split only reads labels and ids, so cheap constant clips suffice.
    Dataset ds{LabelVocabulary(synthetic_class_labels(10), "ten"), {}};
    for (std::size_t k = 0; k < 10; ++k) {
        for (std::size_t i = 0; i < 50; ++i) {
            ds.clips.push_back({VideoTensor::filled({1, 1, 1, 1}, 0.5f, "c" + std::to_string(k) + "-" + std::to_string(i)), k});
        }
    }
    const auto s = split_dataset(ds, 0.8, 3);
    EXPECT_EQ(s.calibration.size(), 400u);
    EXPECT_EQ(s.test_clean.size(), 100u);
    std::vector<std::size_t> per_class(10, 0);
    for (const auto& c : s.calibration) ++per_class[c.label];
    for (auto n : per_class) EXPECT_EQ(n, 40u);
}

TEST(Split, DisjointCompleteDeterministic)
{
    const auto ds = labelled(3, 7);
    for (double ratio : {0.1, 0.5, 0.8, 0.95}) {
        const auto s = split_dataset(ds, ratio, 17);
        const auto cal = ids_of(s.calibration);
        const auto test = ids_of(s.test_clean);
        for (const auto& id : cal) EXPECT_FALSE(test.contains(id));
        EXPECT_EQ(cal.size() + test.size(), ds.clips.size());
        // Within one clip of the requested share unless the one-per-side floor binds
        // (at 0.95 each class of 7 would otherwise keep no test clip).
        const double target = ratio * static_cast<double>(ds.clips.size());
        if (ratio < 0.9) EXPECT_LE(std::abs(static_cast<double>(cal.size()) - target), 1.0);
        std::vector<int> c(3, 0), t(3, 0);
        for (const auto& x : s.calibration) ++c[x.label];
        for (const auto& x : s.test_clean) ++t[x.label];
        for (int k = 0; k < 3; ++k) {
            EXPECT_GE(c[k], 1);
            EXPECT_GE(t[k], 1);
        }
        EXPECT_EQ(ids_of(split_dataset(ds, ratio, 17).calibration), cal);
    }
    EXPECT_NE(ids_of(split_dataset(ds, 0.5, 1).calibration), ids_of(split_dataset(ds, 0.5, 2).calibration));
}

TEST(Split, RejectsBadInput)
{
    const auto ds = labelled(2, 3);
    EXPECT_THROW(split_dataset(ds, 0.0), Error);
    EXPECT_THROW(split_dataset(ds, 1.0), Error);
    EXPECT_THROW(split_dataset(labelled(2, 1), 0.5), Error);
    auto dup = ds;
    dup.clips.push_back(dup.clips.front());
    EXPECT_THROW(split_dataset(dup, 0.5), Error);
}

TEST(Filter, KeepsOnlyCorrectPredictions)
{
    const auto ds = labelled(3, 3);
    const ConstantRecognizer always_one(ds.vocabulary, {0.1, 0.8, 0.1});
    const auto kept = filter_correctly_classified(ds, always_one);
    EXPECT_EQ(kept.clips.size(), 3u);
    for (const auto& c : kept.clips) EXPECT_EQ(c.label, 1u);

    Dataset none{ds.vocabulary, {}};
    for (const auto& c : ds.clips) {
        if (c.label != 1) none.clips.push_back(c);
    }
    try {
        filter_correctly_classified(none, always_one);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::protocol);
    }
}

TEST(PairedSet, DropsFailuresFromBothSides)
{
    // Two classes, every test clip labelled 0; repeated favour() gives each a
    // different margin so moderate budgets fail on some clips only.
    auto cfg = tiny_config(2, 8);
    const auto ds = generate_synthetic_dataset(cfg);
    LinearRecognizer model(ds.vocabulary, ds.clips[0].video.shape(), 21, 0.02);
    DatasetSplit split{ds.vocabulary, {}, {}, 0.5, 0};
    for (const auto& c : ds.clips) {
        if (c.label == 0) {
            split.test_clean.push_back(c);
            model.favour(c.video, 0, 0.05);
        }
    }
    bool saw_partial = false;
    for (double eps : {1e-9, 0.001, 0.003, 0.01, 0.03, 0.1}) {
        AttackSpec spec{AttackKind::pgd_v, eps, 5};
        std::set<std::string> expected;
        for (const auto& c : split.test_clean) {
            if (run_attack(model, c.video, c.label, spec).success) expected.insert(c.video.video_id());
        }
        if (expected.empty()) {
            EXPECT_THROW(build_paired_test_set(split, spec, model), Error);
            continue;
        }
        const auto set = build_paired_test_set(split, spec, model);
        EXPECT_EQ(set.attempted, split.test_clean.size());
        std::set<std::string> kept;
        for (const auto& p : set.pairs) {
            EXPECT_TRUE(p.adversarial.success);
            EXPECT_EQ(p.adversarial.adversarial_video.video_id(), p.clean.video.video_id());
            EXPECT_NE(model.predict(p.adversarial.adversarial_video).argmax(), p.clean.label);
            kept.insert(p.clean.video.video_id());
        }
        EXPECT_EQ(kept, expected);
        EXPECT_DOUBLE_EQ(set.success_rate(), static_cast<double>(kept.size()) / static_cast<double>(set.attempted));
        saw_partial |= kept.size() < set.attempted;
        EXPECT_NO_THROW(verify_paired_test_set(set, model));
    }
    EXPECT_TRUE(saw_partial);
}

TEST(PairedSet, VerifyRejectsBrokenPairs)
{
    const auto ds = labelled(2, 2);
    LinearRecognizer model(ds.vocabulary, ds.clips[0].video.shape(), 2);
    model.favour(ds.clips[0].video, 0);
    PairedTestSet set{ds.vocabulary, {}, {}, 1};
    AdversarialResult fake{ds.clips[0].video, 0, 0, true, 0.0};
    set.pairs.push_back({ds.clips[0], fake});
    EXPECT_THROW(verify_paired_test_set(set, model), Error);
    set.pairs[0].adversarial.success = false;
    EXPECT_THROW(verify_paired_test_set(set, model), Error);
}

TEST(VideoIo, NativeContainerIsExact)
{
    const auto dir = scratch_dir("vt");
    const auto clip = labelled(2, 1).clips[1].video;
    save_video_tensor(dir / "a.vt", clip);
    EXPECT_EQ(load_video_tensor(dir / "a.vt"), clip);
    const auto resized = load_video(dir / "a.vt", 16, 16);
    EXPECT_TRUE(std::equal(resized.data().begin(), resized.data().end(), clip.data().begin()));
    fs::remove_all(dir);
}

TEST(VideoIo, LosslessCodecsRoundTripWithinOneQuantum)
{
    const auto dir = scratch_dir("codec");
    const auto clip = labelled(2, 1).clips[0].video;
    for (const auto& target : {dir / "clip.avi", dir / "frames"}) {
        write_video_file(target, clip);
        const auto back = load_video(target, 16, 16);
        ASSERT_EQ(back.shape(), clip.shape()) << target;
        double worst = 0.0;
        for (std::size_t i = 0; i < clip.data().size(); ++i) {
            worst = std::max(worst, std::abs(static_cast<double>(back.data()[i]) - clip.data()[i]));
        }
        EXPECT_LE(worst, 2.0 / 255.0) << target;
    }
    fs::remove_all(dir);
}

TEST(VideoIo, GrayscaleSourcesGiveOneChannel)
{
    const auto dir = scratch_dir("gray");
    auto cfg = tiny_config(2, 1);
    cfg.channels = 1;
    const auto clip = generate_synthetic_dataset(cfg).clips[0].video;
    write_video_file(dir / "frames", clip);
    const auto back = load_video(dir / "frames", 8, 8);
    EXPECT_EQ(back.shape(), (VideoShape{8, 8, 8, 1}));
    fs::remove_all(dir);
}

TEST(VideoIo, BadSourcesRaiseNamedErrors)
{
    const auto dir = scratch_dir("bad");
    fs::create_directories(dir / "empty");
    { std::ofstream(dir / "junk.avi") << "not a video at all"; }
    { std::ofstream(dir / "short.vt") << "VLADVT01"; }
    for (const auto& p : {dir / "empty", dir / "junk.avi", dir / "short.vt", dir / "missing.vt"}) {
        try {
            load_video(p, 16, 16);
            ADD_FAILURE() << p;
        } catch (const Error& e) {
            EXPECT_NE(std::string(e.what()).find(p.filename().string()), std::string::npos) << e.what();
        }
    }
    fs::remove_all(dir);
}

TEST(Manifest, RoundTrip)
{
    const auto dir = scratch_dir("manifest");
    const std::vector<ClipRecord> clips{{"a", "square moving right", "clips/a.vt", "train"},
                                        {"b", "cross moving left", "/abs/b.vt", "pool"}};
    write_clip_manifest(dir / "m.jsonl", clips, "abc");
    EXPECT_EQ(read_clip_manifest(dir / "m.jsonl"), clips);
    EXPECT_EQ(resolve_record_path(dir / "m.jsonl", "clips/a.vt"), dir / "clips/a.vt");
    EXPECT_EQ(resolve_record_path(dir / "m.jsonl", "/abs/b.vt"), fs::path("/abs/b.vt"));

    AdversarialRecord r;
    r.video_id = "a";
    r.attack = AttackKind::flick;
    r.epsilon = 0.03;
    r.steps = 7;
    r.step_size = 0.01;
    r.success = true;
    r.label = "square moving right";
    r.predicted_label = 3;
    r.perturbation_linf = 0.029;
    r.path = "adv/a.vt";
    AdversarialRecord failed = r;
    failed.video_id = "b";
    failed.success = false;
    failed.path.clear();
    write_adversarial_manifest(dir / "adv.jsonl", {r, failed}, "abc");
    EXPECT_EQ(read_adversarial_manifest(dir / "adv.jsonl"), (std::vector<AdversarialRecord>{r, failed}));
    EXPECT_THROW(read_clip_manifest(dir / "nope.jsonl"), Error);
    fs::remove_all(dir);
}
