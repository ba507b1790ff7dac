#include "vlad/datagen.hpp"

#include "vlad/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace vlad {

namespace {

enum class Shape { square, hollow_square, cross, horizontal_bar, vertical_bar };
enum class Direction { right, left, down, up };

constexpr std::array kShapes{Shape::square, Shape::hollow_square, Shape::cross, Shape::horizontal_bar,
                             Shape::vertical_bar};
constexpr std::array kDirections{Direction::right, Direction::left, Direction::down, Direction::up};

constexpr double kIntensityGrid = 65536.0;  // 2^16

const char* shape_name(Shape s)
{
    switch (s) {
    case Shape::square: return "square";
    case Shape::hollow_square: return "hollow square";
    case Shape::cross: return "cross";
    case Shape::horizontal_bar: return "horizontal bar";
    case Shape::vertical_bar: return "vertical bar";
    }
    return "?";
}

const char* direction_name(Direction d)
{
    switch (d) {
    case Direction::right: return "right";
    case Direction::left: return "left";
    case Direction::down: return "down";
    case Direction::up: return "up";
    }
    return "?";
}

// Classes enumerate all shapes for one direction before moving on to the next.
Shape class_shape(std::size_t label) { return kShapes[label % kShapes.size()]; }
Direction class_direction(std::size_t label) { return kDirections[label / kShapes.size()]; }

bool inside_shape(Shape shape, double dx, double dy, double r)
{
    const double ax = std::abs(dx);
    const double ay = std::abs(dy);
    const double arm = r / 3.0;
    switch (shape) {
    case Shape::square: return ax <= r && ay <= r;
    case Shape::hollow_square: {
        const double wall = std::max(2.0, r / 2.5);
        return ax <= r && ay <= r && (ax > r - wall || ay > r - wall);
    }
    case Shape::cross: return (ax <= r && ay <= arm) || (ay <= r && ax <= arm);
    case Shape::horizontal_bar: return ax <= r && ay <= arm;
    case Shape::vertical_bar: return ay <= r && ax <= arm;
    }
    return false;
}

float quantize(double v) { return static_cast<float>(std::round(std::clamp(v, 0.0, 1.0) * kIntensityGrid) / kIntensityGrid); }

}  // namespace

std::size_t max_synthetic_classes() noexcept { return kShapes.size() * kDirections.size(); }

std::vector<std::string> synthetic_class_labels(std::size_t n_classes)
{
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < n_classes; ++k) {
        labels.push_back(std::string(shape_name(class_shape(k))) + " moving " + direction_name(class_direction(k)));
    }
    return labels;
}

void validate(const SyntheticConfig& c)
{
    if (c.n_classes < 2) {
        throw validation_error("n_classes must be at least 2, got " + std::to_string(c.n_classes));
    }
    if (c.n_classes > max_synthetic_classes()) {
        throw validation_error("n_classes must be at most " + std::to_string(max_synthetic_classes()) + ", got " +
                               std::to_string(c.n_classes));
    }
    if (c.clips_per_class < 1) {
        throw validation_error("clips_per_class must be at least 1");
    }
    if (c.n_frames < 1) {
        throw validation_error("n_frames must be at least 1");
    }
    if (c.height < 16 || c.width < 16) {
        throw validation_error("height and width must be at least 16, got " + std::to_string(c.height) + "x" +
                               std::to_string(c.width));
    }
    if (c.channels != 1 && c.channels != 3) {
        throw validation_error("channels must be 1 or 3, got " + std::to_string(c.channels));
    }
}

VideoTensor render_synthetic_clip(const SyntheticConfig& c, std::size_t label, std::size_t index)
{
    validate(c);
    if (label >= c.n_classes) throw validation_error("label index out of range");

    std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                      static_cast<std::uint32_t>(label), static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    const Shape shape = class_shape(label);
    const Direction dir = class_direction(label);
    const bool horizontal = dir == Direction::right || dir == Direction::left;
    const double sign = (dir == Direction::right || dir == Direction::down) ? 1.0 : -1.0;

    const auto h = static_cast<double>(c.height);
    const auto w = static_cast<double>(c.width);
    const double along_extent = horizontal ? w : h;
    const double across_extent = horizontal ? h : w;
    const double size = uniform(0.22, 0.30) * std::min(h, w);
    const double r = size / 2.0;
    const double trail_len = 0.9 * size;
    const double trail_half = std::max(1.0, size / 10.0);

    // Travel fits inside the frame; the trail may leave it.
    const double room = along_extent - size - 2.0;
    const double travel = uniform(0.45, 0.65) * room;
    const double speed = c.n_frames > 1 ? travel / static_cast<double>(c.n_frames - 1) : 0.0;
    const double start_min = 1.0 + r;
    const double start_max = start_min + (room - travel);
    double along0 = uniform(start_min, std::max(start_min, start_max));
    if (sign < 0) along0 = along_extent - along0;
    const double across = uniform(1.0 + r, across_extent - 1.0 - r);

    const double background = uniform(0.06, 0.12);
    std::array<double, 3> color{};
    for (auto& v : color) v = uniform(0.86, 0.94);
    const double trail_mix = 1.0;

    std::uniform_real_distribution<double> noise(-0.02, 0.02);
    std::vector<float> data(c.n_frames * c.height * c.width * c.channels);
    for (std::size_t n = 0; n < c.n_frames; ++n) {
        const double along = along0 + sign * speed * static_cast<double>(n);
        const double cx = horizontal ? along : across;
        const double cy = horizontal ? across : along;
        for (std::size_t y = 0; y < c.height; ++y) {
            for (std::size_t x = 0; x < c.width; ++x) {
                const double dx = static_cast<double>(x) + 0.5 - cx;
                const double dy = static_cast<double>(y) + 0.5 - cy;
                const double d_along = (horizontal ? dx : dy) * sign;  // > 0 ahead of the centre
                const double d_across = horizontal ? dy : dx;
                double level = 0.0;  // 0 background, trail_mix trail, 1 figure
                if (inside_shape(shape, dx, dy, r)) {
                    level = 1.0;
                } else if (d_along < -r && d_along >= -r - trail_len && std::abs(d_across) <= trail_half) {
                    level = trail_mix;
                }
                const double base = background + noise(rng);
                for (std::size_t ch = 0; ch < c.channels; ++ch) {
                    const double fg = c.channels == 3 ? color[ch] : (color[0] + color[1] + color[2]) / 3.0;
                    data[((n * c.height + y) * c.width + x) * c.channels + ch] = quantize(base + level * (fg - base));
                }
            }
        }
    }
    char id[64];
    std::snprintf(id, sizeof(id), "%s-c%02zu-i%04zu", c.id_prefix.c_str(), label, index);
    return VideoTensor(VideoShape{c.n_frames, c.height, c.width, c.channels}, std::move(data), id);
}

Dataset generate_synthetic_dataset(const SyntheticConfig& c)
{
    validate(c);
    Dataset ds{LabelVocabulary(synthetic_class_labels(c.n_classes), "synthetic-" + std::to_string(c.n_classes)), {}};
    ds.clips.reserve(c.n_classes * c.clips_per_class);
    for (std::size_t label = 0; label < c.n_classes; ++label) {
        for (std::size_t i = 0; i < c.clips_per_class; ++i) {
            ds.clips.push_back({render_synthetic_clip(c, label, i), label});
        }
    }
    return ds;
}

Dataset filter_correctly_classified(const Dataset& dataset, const Recognizer& model)
{
    Dataset kept{dataset.vocabulary, {}};
    for (const auto& clip : dataset.clips) {
        if (checked_predict(model, clip.video).argmax() == clip.label) kept.clips.push_back(clip);
    }
    if (kept.clips.empty()) {
        throw protocol_error("no clip is correctly classified by the recognizer; the model is too weak for the protocol");
    }
    return kept;
}

DatasetSplit split_dataset(const Dataset& dataset, double ratio, std::uint64_t seed)
{
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw validation_error("split ratio must lie in (0,1), got " + std::to_string(ratio));
    }
    const std::size_t m = dataset.vocabulary.size();
    std::vector<std::vector<std::size_t>> by_class(m);
    for (std::size_t i = 0; i < dataset.clips.size(); ++i) {
        const auto label = dataset.clips[i].label;
        if (label >= m) throw validation_error("clip label outside the vocabulary");
        by_class[label].push_back(i);
    }
    std::set<std::string> ids;
    for (const auto& clip : dataset.clips) {
        if (!ids.insert(clip.video.video_id()).second) {
            throw validation_error("duplicate video_id '" + clip.video.video_id() + "' in dataset");
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (by_class[k].size() == 1) {
            throw validation_error("class '" + dataset.vocabulary.label(k) + "' has a single clip; cannot split");
        }
    }

    // Largest-remainder apportionment of round(ratio * total) across classes.
    std::vector<std::size_t> take(m, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    std::size_t total = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const auto nk = by_class[k].size();
        total += nk;
        if (nk == 0) continue;
        const double exact = ratio * static_cast<double>(nk);
        take[k] = static_cast<std::size_t>(std::floor(exact));
        assigned += take[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) {
        ++take[remainders[i].second];
    }
    for (std::size_t k = 0; k < m; ++k) {
        const auto nk = by_class[k].size();
        if (nk >= 2) take[k] = std::clamp<std::size_t>(take[k], 1, nk - 1);
    }

    DatasetSplit split{dataset.vocabulary, {}, {}, ratio, seed};
    for (std::size_t k = 0; k < m; ++k) {
        auto members = by_class[k];
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i = 0; i < members.size(); ++i) {
            auto& dst = i < take[k] ? split.calibration : split.test_clean;
            dst.push_back(dataset.clips[members[i]]);
        }
    }
    return split;
}

PairedTestSet build_paired_test_set(const DatasetSplit& split, const AttackSpec& attack, const Recognizer& model)
{
    attack.validate();
    PairedTestSet set{split.vocabulary, attack, {}, 0};
    for (const auto& clip : split.test_clean) {
        ++set.attempted;
        AdversarialResult result = run_attack(model, clip.video, clip.label, attack);
        if (result.success) set.pairs.push_back({clip, std::move(result)});
    }
    if (set.pairs.empty()) {
        throw protocol_error(std::string(to_string(attack.kind)) + " at epsilon " + std::to_string(attack.epsilon) +
                             " succeeded on none of " + std::to_string(set.attempted) + " test clips");
    }
    verify_paired_test_set(set, model);
    return set;
}

void verify_paired_test_set(const PairedTestSet& set, const Recognizer& model)
{
    for (const auto& pair : set.pairs) {
        if (!pair.adversarial.success || pair.adversarial.original_label != pair.clean.label) {
            throw protocol_error("paired test set holds a failed attack for '" + pair.clean.video.video_id() + "'");
        }
        if (checked_predict(model, pair.adversarial.adversarial_video).argmax() == pair.clean.label) {
            throw protocol_error("adversarial clip '" + pair.clean.video.video_id() +
                                 "' is classified correctly at evaluation time");
        }
    }
}

}  // namespace vlad
