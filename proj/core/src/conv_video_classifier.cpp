#include "vlad/conv_video_classifier.hpp"

#include "vlad/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vlad {

namespace {

constexpr std::size_t kConvWeight = 0;
constexpr std::size_t kConvBias = 1;
constexpr std::size_t kHeadWeight = 2;
constexpr std::size_t kHeadBias = 3;
constexpr std::size_t kTaps = 27;  // 3x3x3 kernel

double log_sum_exp(std::span<const double> v)
{
    const double peak = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double x : v) total += std::exp(x - peak);
    return peak + std::log(total);
}

}  // namespace

void to_json(nlohmann::json& j, const RecognizerConfig& c)
{
    j = nlohmann::json{{"seed", c.seed},
                       {"epochs", c.epochs},
                       {"learning_rate", c.learning_rate},
                       {"batch_size", c.batch_size},
                       {"pool", c.pool},
                       {"input_center", c.input_center},
                       {"input_scale", c.input_scale},
                       {"conv_channels", c.conv_channels},
                       {"temporal_segments", c.temporal_segments},
                       {"spatial_cells", c.spatial_cells},
                       {"pool_sharpness", c.pool_sharpness},
                       {"min_clips_per_class", c.min_clips_per_class}};
}

void from_json(const nlohmann::json& j, RecognizerConfig& c)
{
    RecognizerConfig d;
    c.seed = j.value("seed", d.seed);
    c.epochs = j.value("epochs", d.epochs);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.pool = j.value("pool", d.pool);
    c.input_center = j.value("input_center", d.input_center);
    c.input_scale = j.value("input_scale", d.input_scale);
    c.conv_channels = j.value("conv_channels", d.conv_channels);
    c.temporal_segments = j.value("temporal_segments", d.temporal_segments);
    c.spatial_cells = j.value("spatial_cells", d.spatial_cells);
    c.pool_sharpness = j.value("pool_sharpness", d.pool_sharpness);
    c.min_clips_per_class = j.value("min_clips_per_class", d.min_clips_per_class);
}

struct ConvVideoClassifier::Activations {
    std::vector<double> pooled;    // N x Hp x Wp x C
    std::vector<double> hidden;    // N x Hp x Wp x K, after tanh
    std::vector<double> weights;   // N x Hp x Wp x K, softmax of beta*hidden within its cell
    std::vector<double> features;  // T x G x G x K
    std::vector<double> logits;    // M
};

ConvVideoClassifier::ConvVideoClassifier(LabelVocabulary vocabulary, VideoShape input_shape, RecognizerConfig config)
    : vocabulary_(std::move(vocabulary)), input_shape_(input_shape), config_(config)
{
    const auto& s = input_shape_;
    if (vocabulary_.size() < 2) {
        throw validation_error("recognizer needs a vocabulary of at least 2 labels");
    }
    if (config_.pool == 0 || config_.conv_channels == 0 || config_.temporal_segments == 0 ||
        config_.spatial_cells == 0 || config_.batch_size == 0) {
        throw config_error("recognizer pool, conv_channels, temporal_segments, spatial_cells and batch_size must be positive");
    }
    if (!(config_.pool_sharpness > 0.0) || !std::isfinite(config_.pool_sharpness)) {
        throw config_error("recognizer pool_sharpness must be positive and finite");
    }
    if (s.height % config_.pool != 0 || s.width % config_.pool != 0) {
        throw config_error("input " + to_string(s) + " is not divisible by pool " + std::to_string(config_.pool));
    }
    pooled_h_ = s.height / config_.pool;
    pooled_w_ = s.width / config_.pool;
    if (pooled_h_ % config_.spatial_cells != 0 || pooled_w_ % config_.spatial_cells != 0 ||
        s.frames % config_.temporal_segments != 0) {
        throw config_error("input " + to_string(s) + " is not divisible into " +
                           std::to_string(config_.temporal_segments) + " segments of " +
                           std::to_string(config_.spatial_cells) + "x" + std::to_string(config_.spatial_cells) +
                           " cells");
    }
    const std::size_t k = config_.conv_channels;
    const std::size_t g = config_.spatial_cells;
    feature_count_ = config_.temporal_segments * g * g * k;
    const std::size_t m = vocabulary_.size();

    params_ = {
        {"conv.weight", {k, 3, 3, 3, s.channels}, std::vector<double>(k * kTaps * s.channels, 0.0)},
        {"conv.bias", {k}, std::vector<double>(k, 0.0)},
        {"head.weight", {m, feature_count_}, std::vector<double>(m * feature_count_, 0.0)},
        {"head.bias", {m}, std::vector<double>(m, 0.0)},
    };
    for (const auto& p : params_) optimizer_.emplace_back(p.values.size());
}

ConvVideoClassifier ConvVideoClassifier::initialize(const LabelVocabulary& vocabulary,
                                                    const VideoShape& input_shape,
                                                    const RecognizerConfig& config)
{
    ConvVideoClassifier model(vocabulary, input_shape, config);
    std::mt19937_64 rng(config.seed);
    const double fan_in = static_cast<double>(kTaps * input_shape.channels);
    fill_normal(model.params_[kConvWeight].values, 1.0 / std::sqrt(fan_in), rng);
    return model;
}

void ConvVideoClassifier::check_input(std::size_t size) const
{
    if (size != input_shape_.size()) {
        throw validation_error("recognizer expects input " + to_string(input_shape_) + " (" +
                               std::to_string(input_shape_.size()) + " values), got " + std::to_string(size));
    }
}

template <typename T>
std::vector<double> ConvVideoClassifier::pool_input(std::span<const T> input) const
{
    check_input(input.size());
    const auto& s = input_shape_;
    const std::size_t p = config_.pool;
    const std::size_t c = s.channels;
    std::vector<double> pooled(s.frames * pooled_h_ * pooled_w_ * c, 0.0);
    for (std::size_t n = 0; n < s.frames; ++n) {
        for (std::size_t y = 0; y < s.height; ++y) {
            const std::size_t i = y / p;
            const T* row = input.data() + (n * s.height + y) * s.width * c;
            double* out_row = pooled.data() + (n * pooled_h_ + i) * pooled_w_ * c;
            for (std::size_t x = 0; x < s.width; ++x) {
                double* out = out_row + (x / p) * c;
                for (std::size_t ch = 0; ch < c; ++ch) out[ch] += static_cast<double>(row[x * c + ch]);
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(p * p);
    for (double& v : pooled) v = (v * inv - config_.input_center) * config_.input_scale;
    return pooled;
}

ConvVideoClassifier::Activations ConvVideoClassifier::forward(std::vector<double> pooled) const
{
    const std::size_t nf = input_shape_.frames;
    const std::size_t hp = pooled_h_;
    const std::size_t wp = pooled_w_;
    const std::size_t c = input_shape_.channels;
    const std::size_t k = config_.conv_channels;
    const std::size_t g = config_.spatial_cells;
    const std::size_t seg_len = nf / config_.temporal_segments;
    const std::size_t cell_h = hp / g;
    const std::size_t cell_w = wp / g;
    const auto& w = params_[kConvWeight].values;
    const auto& b = params_[kConvBias].values;

    Activations act;
    act.hidden.assign(nf * hp * wp * k, 0.0);
    act.features.assign(feature_count_, 0.0);
    std::vector<double> z(k);

    for (std::size_t n = 0; n < nf; ++n) {
        for (std::size_t i = 0; i < hp; ++i) {
            for (std::size_t j = 0; j < wp; ++j) {
                std::copy(b.begin(), b.end(), z.begin());
                for (std::size_t tap = 0; tap < kTaps; ++tap) {
                    const auto nn = static_cast<std::ptrdiff_t>(n) + static_cast<std::ptrdiff_t>(tap / 9) - 1;
                    const auto ii = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>((tap / 3) % 3) - 1;
                    const auto jj = static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(tap % 3) - 1;
                    if (nn < 0 || ii < 0 || jj < 0 || nn >= static_cast<std::ptrdiff_t>(nf) ||
                        ii >= static_cast<std::ptrdiff_t>(hp) || jj >= static_cast<std::ptrdiff_t>(wp)) {
                        continue;
                    }
                    const double* u = pooled.data() + ((static_cast<std::size_t>(nn) * hp + static_cast<std::size_t>(ii)) * wp +
                                                       static_cast<std::size_t>(jj)) * c;
                    for (std::size_t o = 0; o < k; ++o) {
                        const double* wk = w.data() + (o * kTaps + tap) * c;
                        double acc = 0.0;
                        for (std::size_t ch = 0; ch < c; ++ch) acc += wk[ch] * u[ch];
                        z[o] += acc;
                    }
                }
                double* h = act.hidden.data() + ((n * hp + i) * wp + j) * k;
                for (std::size_t o = 0; o < k; ++o) h[o] = std::tanh(z[o]);
            }
        }
    }

    // Per frame and cell: (1/beta) log mean exp(beta h); hidden is in [-1, 1]
    // so shifting by beta keeps every exponent <= 0.
    const double beta = config_.pool_sharpness;
    const double cell_size = static_cast<double>(cell_h * cell_w);
    act.weights.assign(act.hidden.size(), 0.0);
    std::vector<double> sum(k);
    for (std::size_t n = 0; n < nf; ++n) {
        for (std::size_t gi = 0; gi < g; ++gi) {
            for (std::size_t gj = 0; gj < g; ++gj) {
                std::fill(sum.begin(), sum.end(), 0.0);
                for (std::size_t i = gi * cell_h; i < (gi + 1) * cell_h; ++i) {
                    for (std::size_t j = gj * cell_w; j < (gj + 1) * cell_w; ++j) {
                        const std::size_t at = ((n * hp + i) * wp + j) * k;
                        for (std::size_t o = 0; o < k; ++o) {
                            act.weights[at + o] = std::exp(beta * (act.hidden[at + o] - 1.0));
                            sum[o] += act.weights[at + o];
                        }
                    }
                }
                for (std::size_t i = gi * cell_h; i < (gi + 1) * cell_h; ++i) {
                    for (std::size_t j = gj * cell_w; j < (gj + 1) * cell_w; ++j) {
                        const std::size_t at = ((n * hp + i) * wp + j) * k;
                        for (std::size_t o = 0; o < k; ++o) act.weights[at + o] /= sum[o];
                    }
                }
                double* f = act.features.data() + (((n / seg_len) * g + gi) * g + gj) * k;
                for (std::size_t o = 0; o < k; ++o) f[o] += 1.0 + std::log(sum[o] / cell_size) / beta;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(seg_len);
    for (double& v : act.features) v *= inv;

    const std::size_t m = vocabulary_.size();
    const auto& hw = params_[kHeadWeight].values;
    const auto& hb = params_[kHeadBias].values;
    act.logits.assign(m, 0.0);
    for (std::size_t cls = 0; cls < m; ++cls) {
        double acc = hb[cls];
        const double* row = hw.data() + cls * feature_count_;
        for (std::size_t q = 0; q < feature_count_; ++q) acc += row[q] * act.features[q];
        act.logits[cls] = acc;
    }
    act.pooled = std::move(pooled);
    return act;
}

std::vector<double> ConvVideoClassifier::backward(const Activations& act,
                                                  std::size_t label,
                                                  std::vector<std::vector<double>>* param_grads,
                                                  bool want_input_grad) const
{
    const std::size_t nf = input_shape_.frames;
    const std::size_t hp = pooled_h_;
    const std::size_t wp = pooled_w_;
    const std::size_t c = input_shape_.channels;
    const std::size_t k = config_.conv_channels;
    const std::size_t g = config_.spatial_cells;
    const std::size_t m = vocabulary_.size();
    const std::size_t seg_len = nf / config_.temporal_segments;
    const std::size_t cell_h = hp / g;
    const std::size_t cell_w = wp / g;

    std::vector<double> dlogits = softmax(act.logits);
    dlogits[label] -= 1.0;

    const auto& hw = params_[kHeadWeight].values;
    std::vector<double> dfeat(feature_count_, 0.0);
    for (std::size_t cls = 0; cls < m; ++cls) {
        const double d = dlogits[cls];
        const double* row = hw.data() + cls * feature_count_;
        for (std::size_t q = 0; q < feature_count_; ++q) dfeat[q] += row[q] * d;
    }
    if (param_grads) {
        auto& ghw = (*param_grads)[kHeadWeight];
        auto& ghb = (*param_grads)[kHeadBias];
        for (std::size_t cls = 0; cls < m; ++cls) {
            const double d = dlogits[cls];
            double* row = ghw.data() + cls * feature_count_;
            for (std::size_t q = 0; q < feature_count_; ++q) row[q] += d * act.features[q];
            ghb[cls] += d;
        }
    }

    const double inv = 1.0 / static_cast<double>(seg_len);
    for (double& v : dfeat) v *= inv;

    const auto& w = params_[kConvWeight].values;
    std::vector<double> dpooled(want_input_grad ? act.pooled.size() : 0, 0.0);
    double* gw = param_grads ? (*param_grads)[kConvWeight].data() : nullptr;
    double* gb = param_grads ? (*param_grads)[kConvBias].data() : nullptr;
    std::vector<double> dz(k);

    for (std::size_t n = 0; n < nf; ++n) {
        for (std::size_t i = 0; i < hp; ++i) {
            for (std::size_t j = 0; j < wp; ++j) {
                const double* h = act.hidden.data() + ((n * hp + i) * wp + j) * k;
                const double* a = act.weights.data() + ((n * hp + i) * wp + j) * k;
                const double* df = dfeat.data() + (((n / seg_len) * g + i / cell_h) * g + j / cell_w) * k;
                for (std::size_t o = 0; o < k; ++o) dz[o] = df[o] * a[o] * (1.0 - h[o] * h[o]);
                if (gb) {
                    for (std::size_t o = 0; o < k; ++o) gb[o] += dz[o];
                }
                for (std::size_t tap = 0; tap < kTaps; ++tap) {
                    const auto nn = static_cast<std::ptrdiff_t>(n) + static_cast<std::ptrdiff_t>(tap / 9) - 1;
                    const auto ii = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>((tap / 3) % 3) - 1;
                    const auto jj = static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(tap % 3) - 1;
                    if (nn < 0 || ii < 0 || jj < 0 || nn >= static_cast<std::ptrdiff_t>(nf) ||
                        ii >= static_cast<std::ptrdiff_t>(hp) || jj >= static_cast<std::ptrdiff_t>(wp)) {
                        continue;
                    }
                    const std::size_t base = ((static_cast<std::size_t>(nn) * hp + static_cast<std::size_t>(ii)) * wp +
                                              static_cast<std::size_t>(jj)) * c;
                    const double* u = act.pooled.data() + base;
                    for (std::size_t o = 0; o < k; ++o) {
                        const double d = dz[o];
                        if (gw) {
                            double* gk = gw + (o * kTaps + tap) * c;
                            for (std::size_t ch = 0; ch < c; ++ch) gk[ch] += d * u[ch];
                        }
                        if (want_input_grad) {
                            const double* wk = w.data() + (o * kTaps + tap) * c;
                            double* du = dpooled.data() + base;
                            for (std::size_t ch = 0; ch < c; ++ch) du[ch] += d * wk[ch];
                        }
                    }
                }
            }
        }
    }
    return dpooled;
}

std::vector<double> ConvVideoClassifier::unpool_gradient(const std::vector<double>& pooled_grad) const
{
    const auto& s = input_shape_;
    const std::size_t p = config_.pool;
    const std::size_t c = s.channels;
    const double inv = config_.input_scale / static_cast<double>(p * p);
    std::vector<double> grad(s.size());
    for (std::size_t n = 0; n < s.frames; ++n) {
        for (std::size_t y = 0; y < s.height; ++y) {
            const double* src_row = pooled_grad.data() + (n * pooled_h_ + y / p) * pooled_w_ * c;
            double* dst_row = grad.data() + (n * s.height + y) * s.width * c;
            for (std::size_t x = 0; x < s.width; ++x) {
                for (std::size_t ch = 0; ch < c; ++ch) dst_row[x * c + ch] = src_row[(x / p) * c + ch] * inv;
            }
        }
    }
    return grad;
}

std::vector<double> ConvVideoClassifier::logits(std::span<const double> input) const
{
    return forward(pool_input(input)).logits;
}

double ConvVideoClassifier::loss(std::span<const double> input, std::size_t label) const
{
    if (label >= vocabulary_.size()) throw validation_error("label index out of range");
    const auto z = logits(input);
    return log_sum_exp(z) - z[label];
}

std::vector<double> ConvVideoClassifier::input_gradient(std::span<const double> input, std::size_t label) const
{
    if (label >= vocabulary_.size()) throw validation_error("label index out of range");
    const Activations act = forward(pool_input(input));
    return unpool_gradient(backward(act, label, nullptr, true));
}

ClassProbabilities ConvVideoClassifier::predict(const VideoTensor& video) const
{
    if (video.shape() != input_shape_) {
        throw validation_error("recognizer expects " + to_string(input_shape_) + ", got " + to_string(video.shape()));
    }
    const Activations act = forward(pool_input(video.data()));
    return ClassProbabilities(softmax(act.logits), vocabulary_.id());
}

std::vector<double> ConvVideoClassifier::loss_gradient(const VideoTensor& video, std::size_t label) const
{
    if (video.shape() != input_shape_) {
        throw validation_error("recognizer expects " + to_string(input_shape_) + ", got " + to_string(video.shape()));
    }
    if (label >= vocabulary_.size()) throw validation_error("label index out of range");
    const Activations act = forward(pool_input(video.data()));
    return unpool_gradient(backward(act, label, nullptr, true));
}

void ConvVideoClassifier::train(const Dataset& dataset, int until_epoch)
{
    if (dataset.vocabulary != vocabulary_) {
        throw validation_error("training dataset vocabulary '" + dataset.vocabulary.id() +
                               "' differs from the model vocabulary '" + vocabulary_.id() + "'");
    }
    const auto counts = dataset.class_counts();
    const auto populated = std::count_if(counts.begin(), counts.end(), [](std::size_t n) { return n > 0; });
    if (populated < 2) {
        throw validation_error("recognizer training needs at least 2 populated classes");
    }
    for (std::size_t cls = 0; cls < counts.size(); ++cls) {
        if (counts[cls] > 0 && counts[cls] < config_.min_clips_per_class) {
            throw validation_error("class '" + vocabulary_.label(cls) + "' has " + std::to_string(counts[cls]) +
                                   " clips, recognizer training needs " + std::to_string(config_.min_clips_per_class));
        }
    }
    for (const auto& clip : dataset.clips) {
        if (clip.video.shape() != input_shape_) {
            throw validation_error("clip '" + clip.video.video_id() + "' has shape " + to_string(clip.video.shape()) +
                                   ", model expects " + to_string(input_shape_));
        }
    }
    if (until_epoch <= epochs_completed_) return;

    std::vector<std::vector<double>> pooled;
    pooled.reserve(dataset.clips.size());
    for (const auto& clip : dataset.clips) pooled.push_back(pool_input(clip.video.data()));

    std::vector<std::vector<double>> grads(params_.size());
    for (std::size_t p = 0; p < params_.size(); ++p) grads[p].resize(params_[p].values.size());

    for (int epoch = epochs_completed_; epoch < until_epoch; ++epoch) {
        const auto order = epoch_order(dataset.clips.size(), config_.seed, epoch);
        for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
            const std::size_t end = std::min(order.size(), start + config_.batch_size);
            for (auto& gv : grads) std::fill(gv.begin(), gv.end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t idx = order[b];
                const Activations act = forward(pooled[idx]);
                backward(act, dataset.clips[idx].label, &grads, false);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            ++optimizer_step_;
            for (std::size_t p = 0; p < params_.size(); ++p) {
                for (double& gv : grads[p]) gv *= scale;
                optimizer_[p].step(params_[p].values, grads[p], config_.learning_rate, optimizer_step_);
            }
        }
        ++epochs_completed_;
    }
}

Checkpoint ConvVideoClassifier::to_checkpoint() const
{
    Checkpoint ckpt;
    ckpt.contract_type = "recognizer";
    ckpt.model_type = "conv_video_classifier";
    ckpt.vocabulary = vocabulary_;
    ckpt.seed = config_.seed;
    ckpt.config = nlohmann::json{{"model", config_},
                                 {"input_shape",
                                  {input_shape_.frames, input_shape_.height, input_shape_.width, input_shape_.channels}}};
    ckpt.config_digest = config_digest(ckpt.config);
    ckpt.state = nlohmann::json{{"epochs_completed", epochs_completed_}, {"optimizer_step", optimizer_step_}};
    for (std::size_t p = 0; p < params_.size(); ++p) {
        ckpt.arrays.push_back(params_[p]);
        ckpt.arrays.push_back({"adam.m." + params_[p].name, params_[p].dims, optimizer_[p].first_moment()});
        ckpt.arrays.push_back({"adam.v." + params_[p].name, params_[p].dims, optimizer_[p].second_moment()});
    }
    return ckpt;
}

ConvVideoClassifier ConvVideoClassifier::from_checkpoint(const Checkpoint& ckpt)
{
    if (ckpt.contract_type != "recognizer" || ckpt.model_type != "conv_video_classifier") {
        throw model_error("checkpoint holds a " + ckpt.contract_type + "/" + ckpt.model_type +
                          ", expected recognizer/conv_video_classifier");
    }
    const auto config = ckpt.config.at("model").get<RecognizerConfig>();
    const auto dims = ckpt.config.at("input_shape").get<std::vector<std::size_t>>();
    if (dims.size() != 4) throw model_error("checkpoint input_shape must have 4 entries");
    ConvVideoClassifier model(ckpt.vocabulary, VideoShape{dims[0], dims[1], dims[2], dims[3]}, config);
    for (std::size_t p = 0; p < model.params_.size(); ++p) {
        auto& param = model.params_[p];
        const auto& stored = ckpt.array(param.name);
        if (stored.dims != param.dims) {
            throw model_error("checkpoint array '" + param.name + "' has unexpected dims");
        }
        param.values = stored.values;
        model.optimizer_[p].first_moment() = ckpt.array("adam.m." + param.name).values;
        model.optimizer_[p].second_moment() = ckpt.array("adam.v." + param.name).values;
    }
    model.epochs_completed_ = ckpt.state.value("epochs_completed", 0);
    model.optimizer_step_ = ckpt.state.value("optimizer_step", std::int64_t{0});
    return model;
}

ConvVideoClassifier train_recognizer(const Dataset& dataset, const RecognizerConfig& config)
{
    if (dataset.clips.empty()) {
        throw validation_error("recognizer training dataset is empty");
    }
    auto model = ConvVideoClassifier::initialize(dataset.vocabulary, dataset.clips.front().video.shape(), config);
    model.train(dataset, config.epochs);
    return model;
}

double clip_accuracy(const Recognizer& model, const Dataset& dataset)
{
    if (dataset.clips.empty()) throw validation_error("accuracy of an empty dataset is undefined");
    std::size_t correct = 0;
    for (const auto& clip : dataset.clips) {
        if (model.predict(clip.video).argmax() == clip.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.clips.size());
}

}  // namespace vlad
