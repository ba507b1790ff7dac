#include "vlad/dual_encoder_scorer.hpp"

#include "vlad/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vlad {

namespace {

constexpr std::size_t kW1 = 0;
constexpr std::size_t kB1 = 1;
constexpr std::size_t kW2 = 2;
constexpr std::size_t kB2 = 3;
constexpr std::size_t kLabels = 4;

}  // namespace

void to_json(nlohmann::json& j, const ScorerConfig& c)
{
    j = nlohmann::json{{"seed", c.seed},
                       {"epochs", c.epochs},
                       {"learning_rate", c.learning_rate},
                       {"batch_size", c.batch_size},
                       {"pool", c.pool},
                       {"hidden", c.hidden},
                       {"embedding_dim", c.embedding_dim},
                       {"mask_threshold", c.mask_threshold},
                       {"temperature", c.temperature},
                       {"min_clips_per_class", c.min_clips_per_class}};
}

void from_json(const nlohmann::json& j, ScorerConfig& c)
{
    ScorerConfig d;
    c.seed = j.value("seed", d.seed);
    c.epochs = j.value("epochs", d.epochs);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.pool = j.value("pool", d.pool);
    c.hidden = j.value("hidden", d.hidden);
    c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
    c.mask_threshold = j.value("mask_threshold", d.mask_threshold);
    c.temperature = j.value("temperature", d.temperature);
    c.min_clips_per_class = j.value("min_clips_per_class", d.min_clips_per_class);
}

DualEncoderScorer::DualEncoderScorer(LabelVocabulary vocabulary,
                                     std::size_t frame_height,
                                     std::size_t frame_width,
                                     ScorerConfig config)
    : vocabulary_(std::move(vocabulary)), frame_height_(frame_height), frame_width_(frame_width), config_(config)
{
    if (vocabulary_.size() < 2) {
        throw validation_error("scorer needs a vocabulary of at least 2 labels");
    }
    if (config_.pool == 0 || config_.hidden == 0 || config_.embedding_dim == 0 || config_.batch_size == 0) {
        throw config_error("scorer pool, hidden, embedding_dim and batch_size must be positive");
    }
    if (frame_height_ % config_.pool != 0 || frame_width_ % config_.pool != 0) {
        throw config_error("frame size " + std::to_string(frame_height_) + "x" + std::to_string(frame_width_) +
                           " is not divisible by pool " + std::to_string(config_.pool));
    }
    set_temperature(config_.temperature);
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) label_rows_.emplace(vocabulary_.label(i), i);
    grid_size_ = (frame_height_ / config_.pool) * (frame_width_ / config_.pool);
    const std::size_t hdim = config_.hidden;
    const std::size_t edim = config_.embedding_dim;
    const std::size_t m = vocabulary_.size();
    params_ = {
        {"frame.w1", {hdim, grid_size_}, std::vector<double>(hdim * grid_size_, 0.0)},
        {"frame.b1", {hdim}, std::vector<double>(hdim, 0.0)},
        {"frame.w2", {edim, hdim}, std::vector<double>(edim * hdim, 0.0)},
        {"frame.b2", {edim}, std::vector<double>(edim, 0.0)},
        {"label.embedding", {m, edim}, std::vector<double>(m * edim, 0.0)},
    };
    for (const auto& p : params_) optimizer_.emplace_back(p.values.size());
}

DualEncoderScorer DualEncoderScorer::initialize(const LabelVocabulary& vocabulary,
                                                std::size_t frame_height,
                                                std::size_t frame_width,
                                                const ScorerConfig& config)
{
    DualEncoderScorer scorer(vocabulary, frame_height, frame_width, config);
    std::mt19937_64 rng(config.seed);
    fill_normal(scorer.params_[kW1].values, 1.0 / std::sqrt(static_cast<double>(scorer.grid_size_)), rng);
    fill_normal(scorer.params_[kW2].values, 1.0 / std::sqrt(static_cast<double>(config.hidden)), rng);
    // Small label embeddings: untrained similarities sit near zero for every label.
    fill_normal(scorer.params_[kLabels].values, 0.01, rng);
    return scorer;
}

void DualEncoderScorer::set_temperature(double temperature)
{
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw config_error("scorer temperature must be positive and finite");
    }
    config_.temperature = temperature;
}

std::vector<double> DualEncoderScorer::occupancy(std::span<const float> frame, std::size_t channels) const
{
    if (frame.size() != frame_height_ * frame_width_ * channels) {
        throw validation_error("scorer expects " + std::to_string(frame_height_) + "x" + std::to_string(frame_width_) +
                               " frames");
    }
    const std::size_t p = config_.pool;
    const std::size_t gw = frame_width_ / p;
    const auto threshold = static_cast<float>(config_.mask_threshold);
    std::vector<double> grid(grid_size_, 0.0);
    for (std::size_t y = 0; y < frame_height_; ++y) {
        for (std::size_t x = 0; x < frame_width_; ++x) {
            const float* px = frame.data() + (y * frame_width_ + x) * channels;
            const float peak = *std::max_element(px, px + channels);
            if (peak > threshold) grid[(y / p) * gw + x / p] += 1.0;
        }
    }
    const double inv = 1.0 / static_cast<double>(p * p);
    for (double& v : grid) v *= inv;
    return grid;
}

namespace {

struct EncoderPass {
    std::vector<double> hidden;
    std::vector<double> embedding;
};

EncoderPass encode(std::span<const ParameterTensor> params, std::span<const double> grid)
{
    const auto& w1 = params[kW1].values;
    const auto& b1 = params[kB1].values;
    const auto& w2 = params[kW2].values;
    const auto& b2 = params[kB2].values;
    const std::size_t hdim = b1.size();
    const std::size_t edim = b2.size();
    EncoderPass pass;
    pass.hidden.resize(hdim);
    for (std::size_t h = 0; h < hdim; ++h) {
        double acc = b1[h];
        const double* row = w1.data() + h * grid.size();
        for (std::size_t q = 0; q < grid.size(); ++q) acc += row[q] * grid[q];
        pass.hidden[h] = std::tanh(acc);
    }
    pass.embedding.resize(edim);
    for (std::size_t e = 0; e < edim; ++e) {
        double acc = b2[e];
        const double* row = w2.data() + e * hdim;
        for (std::size_t h = 0; h < hdim; ++h) acc += row[h] * pass.hidden[h];
        pass.embedding[e] = acc;
    }
    return pass;
}

}  // namespace

std::vector<double> DualEncoderScorer::encode_frame(std::span<const float> frame, std::size_t channels) const
{
    return encode(params_, occupancy(frame, channels)).embedding;
}

SimilarityMatrix DualEncoderScorer::similarity(const VideoTensor& frames, const LabelVocabulary& vocabulary) const
{
    if (frames.shape().height != frame_height_ || frames.shape().width != frame_width_) {
        throw validation_error("scorer expects " + std::to_string(frame_height_) + "x" + std::to_string(frame_width_) +
                               " frames, got " + to_string(frames.shape()));
    }
    std::vector<std::size_t> rows;
    rows.reserve(vocabulary.size());
    for (const auto& label : vocabulary.labels()) {
        auto it = label_rows_.find(label);
        if (it == label_rows_.end()) {
            throw validation_error("label '" + label + "' has no embedding in this scorer");
        }
        rows.push_back(it->second);
    }
    const std::size_t n = frames.shape().frames;
    const std::size_t m = vocabulary.size();
    const std::size_t edim = config_.embedding_dim;
    const auto& table = params_[kLabels].values;
    const double inv_t = 1.0 / config_.temperature;
    std::vector<double> values(n * m);
    for (std::size_t f = 0; f < n; ++f) {
        const auto e = encode_frame(frames.frame(f), frames.shape().channels);
        for (std::size_t j = 0; j < m; ++j) {
            const double* u = table.data() + rows[j] * edim;
            double acc = 0.0;
            for (std::size_t d = 0; d < edim; ++d) acc += e[d] * u[d];
            values[f * m + j] = acc * inv_t;
        }
    }
    return SimilarityMatrix(n, m, std::move(values));
}

void DualEncoderScorer::train(const Dataset& dataset, int until_epoch)
{
    if (dataset.vocabulary != vocabulary_) {
        throw validation_error("training dataset vocabulary differs from the scorer vocabulary");
    }
    const auto counts = dataset.class_counts();
    const auto populated = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    if (populated < 2) {
        throw validation_error("scorer training needs at least 2 populated classes");
    }
    for (std::size_t cls = 0; cls < counts.size(); ++cls) {
        if (counts[cls] > 0 && counts[cls] < config_.min_clips_per_class) {
            throw validation_error("class '" + vocabulary_.label(cls) + "' has " + std::to_string(counts[cls]) +
                                   " clips, scorer training needs " + std::to_string(config_.min_clips_per_class));
        }
    }
    if (until_epoch <= epochs_completed_) return;

    struct Sample {
        std::vector<double> grid;
        std::size_t label;
    };
    std::vector<Sample> samples;
    for (const auto& clip : dataset.clips) {
        const auto& s = clip.video.shape();
        if (s.height != frame_height_ || s.width != frame_width_) {
            throw validation_error("clip '" + clip.video.video_id() + "' frame size does not match the scorer");
        }
        for (std::size_t f = 0; f < s.frames; ++f) {
            samples.push_back({occupancy(clip.video.frame(f), s.channels), clip.label});
        }
    }

    const std::size_t hdim = config_.hidden;
    const std::size_t edim = config_.embedding_dim;
    const std::size_t m = vocabulary_.size();
    std::vector<std::vector<double>> grads(params_.size());
    for (std::size_t p = 0; p < params_.size(); ++p) grads[p].resize(params_[p].values.size());
    std::vector<double> logits(m);
    std::vector<double> de(edim);
    std::vector<double> dh(hdim);

    for (int epoch = epochs_completed_; epoch < until_epoch; ++epoch) {
        const auto order = epoch_order(samples.size(), config_.seed, epoch);
        for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
            const std::size_t end = std::min(order.size(), start + config_.batch_size);
            for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const Sample& sample = samples[order[b]];
                const EncoderPass pass = encode(params_, sample.grid);
                const auto& table = params_[kLabels].values;
                for (std::size_t j = 0; j < m; ++j) {
                    double acc = 0.0;
                    for (std::size_t d = 0; d < edim; ++d) acc += pass.embedding[d] * table[j * edim + d];
                    logits[j] = acc;
                }
                auto dlogits = softmax(logits);
                dlogits[sample.label] -= 1.0;

                std::fill(de.begin(), de.end(), 0.0);
                for (std::size_t j = 0; j < m; ++j) {
                    for (std::size_t d = 0; d < edim; ++d) {
                        de[d] += dlogits[j] * table[j * edim + d];
                        grads[kLabels][j * edim + d] += dlogits[j] * pass.embedding[d];
                    }
                }
                const auto& w2 = params_[kW2].values;
                std::fill(dh.begin(), dh.end(), 0.0);
                for (std::size_t d = 0; d < edim; ++d) {
                    grads[kB2][d] += de[d];
                    for (std::size_t h = 0; h < hdim; ++h) {
                        grads[kW2][d * hdim + h] += de[d] * pass.hidden[h];
                        dh[h] += de[d] * w2[d * hdim + h];
                    }
                }
                for (std::size_t h = 0; h < hdim; ++h) {
                    const double dz = dh[h] * (1.0 - pass.hidden[h] * pass.hidden[h]);
                    grads[kB1][h] += dz;
                    double* row = grads[kW1].data() + h * grid_size_;
                    for (std::size_t q = 0; q < grid_size_; ++q) row[q] += dz * sample.grid[q];
                }
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            ++optimizer_step_;
            for (std::size_t p = 0; p < params_.size(); ++p) {
                for (double& g : grads[p]) g *= scale;
                optimizer_[p].step(params_[p].values, grads[p], config_.learning_rate, optimizer_step_);
            }
        }
        ++epochs_completed_;
    }
}

Checkpoint DualEncoderScorer::to_checkpoint() const
{
    Checkpoint ckpt;
    ckpt.contract_type = "scorer";
    ckpt.model_type = "dual_encoder_scorer";
    ckpt.vocabulary = vocabulary_;
    ckpt.seed = config_.seed;
    ckpt.config = nlohmann::json{{"model", config_}, {"frame_size", {frame_height_, frame_width_}}};
    ckpt.config_digest = config_digest(ckpt.config);
    ckpt.state = nlohmann::json{{"epochs_completed", epochs_completed_}, {"optimizer_step", optimizer_step_}};
    for (std::size_t p = 0; p < params_.size(); ++p) {
        ckpt.arrays.push_back(params_[p]);
        ckpt.arrays.push_back({"adam.m." + params_[p].name, params_[p].dims, optimizer_[p].first_moment()});
        ckpt.arrays.push_back({"adam.v." + params_[p].name, params_[p].dims, optimizer_[p].second_moment()});
    }
    return ckpt;
}

DualEncoderScorer DualEncoderScorer::from_checkpoint(const Checkpoint& ckpt)
{
    if (ckpt.contract_type != "scorer" || ckpt.model_type != "dual_encoder_scorer") {
        throw model_error("checkpoint holds a " + ckpt.contract_type + "/" + ckpt.model_type +
                          ", expected scorer/dual_encoder_scorer");
    }
    const auto config = ckpt.config.at("model").get<ScorerConfig>();
    const auto size = ckpt.config.at("frame_size").get<std::vector<std::size_t>>();
    if (size.size() != 2) throw model_error("checkpoint frame_size must have 2 entries");
    DualEncoderScorer scorer(ckpt.vocabulary, size[0], size[1], config);
    for (std::size_t p = 0; p < scorer.params_.size(); ++p) {
        auto& param = scorer.params_[p];
        const auto& stored = ckpt.array(param.name);
        if (stored.dims != param.dims) {
            throw model_error("checkpoint array '" + param.name + "' has unexpected dims");
        }
        param.values = stored.values;
        scorer.optimizer_[p].first_moment() = ckpt.array("adam.m." + param.name).values;
        scorer.optimizer_[p].second_moment() = ckpt.array("adam.v." + param.name).values;
    }
    scorer.epochs_completed_ = ckpt.state.value("epochs_completed", 0);
    scorer.optimizer_step_ = ckpt.state.value("optimizer_step", std::int64_t{0});
    return scorer;
}

DualEncoderScorer train_scorer(const Dataset& dataset, const ScorerConfig& config)
{
    if (dataset.clips.empty()) {
        throw validation_error("scorer training dataset is empty");
    }
    const auto& shape = dataset.clips.front().video.shape();
    auto scorer = DualEncoderScorer::initialize(dataset.vocabulary, shape.height, shape.width, config);
    scorer.train(dataset, config.epochs);
    return scorer;
}

double frame_retrieval_accuracy(const FrameLabelScorer& scorer, const Dataset& dataset)
{
    std::size_t total = 0;
    std::size_t correct = 0;
    for (const auto& clip : dataset.clips) {
        const SimilarityMatrix s = scorer.similarity(clip.video, dataset.vocabulary);
        for (std::size_t f = 0; f < s.frame_count(); ++f) {
            auto row = s.row(f);
            const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            correct += best == clip.label ? 1 : 0;
            ++total;
        }
    }
    if (total == 0) throw validation_error("frame retrieval accuracy of an empty dataset is undefined");
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace vlad
