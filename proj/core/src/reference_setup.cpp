#include "vlad/reference_setup.hpp"

#include "vlad/checkpoint.hpp"
#include "vlad/error.hpp"
#include "vlad/serialization.hpp"

#include <algorithm>
#include <cctype>

namespace vlad {

using nlohmann::json;

namespace {

// Rejects keys that do not appear in the fully populated reference form, so
// a typo in a config file fails loudly instead of being ignored.
void check_known_keys(const json& given, const json& known, const std::string& where)
{
    if (!given.is_object()) {
        throw config_error((where.empty() ? std::string("config") : where) + " must be an object");
    }
    for (const auto& [key, value] : given.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!known.contains(key)) throw config_error("unknown config key '" + path + "'");
        if (value.is_object() && known.at(key).is_object()) check_known_keys(value, known.at(key), path);
    }
}

template <typename T>
T get_field(const json& j, const char* section, const char* key)
{
    try {
        return j.at(section).at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error(std::string(section) + "." + key + ": " + e.what());
    }
}

}  // namespace

ExperimentConfig reference_config()
{
    ExperimentConfig c;
    c.eval_data.seed = 2024;
    c.eval_data.id_prefix = "syn";
    c.train_data = c.eval_data;
    c.train_data.seed = 7;
    c.train_data.id_prefix = "syn-train";
    c.attack.kind = AttackKind::pgd_v;
    c.attack.epsilon = 0.1;
    c.attacks = {"FGSM-v", "PGD-v", "OFA", "Flick"};
    c.sweep_epsilons = {0.003, 0.01, 0.03, 0.1, 0.3};
    return c;
}

std::string_view to_string(PseudoFrameMethod method) noexcept
{
    return method == PseudoFrameMethod::flow_warp ? "flow_warp" : "neighbor_mean";
}

PseudoFrameMethod parse_pseudo_frame_method(std::string_view name)
{
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "neighbor_mean") return PseudoFrameMethod::neighbor_mean;
    if (s == "flow_warp") return PseudoFrameMethod::flow_warp;
    throw config_error("unknown pseudo-frame method '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const
{
    try {
        vlad::validate(train_data);
        vlad::validate(eval_data);
        attack.validate();
    } catch (const Error& e) {
        throw config_error(e.what());
    }
    if (train_data.n_classes != eval_data.n_classes) {
        throw config_error("dataset.train.n_classes must equal dataset.eval.n_classes");
    }
    if (train_data.n_frames != eval_data.n_frames || train_data.height != eval_data.height ||
        train_data.width != eval_data.width || train_data.channels != eval_data.channels) {
        throw config_error("dataset.train and dataset.eval must share the clip shape");
    }
    if (train_data.id_prefix == eval_data.id_prefix) {
        throw config_error("dataset.train.id_prefix must differ from dataset.eval.id_prefix");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw config_error("dataset.split_ratio must be in (0,1)");
    if (!(theta >= 0.0 && theta <= 100.0)) throw config_error("detector.theta must be in [0,100]");
    if (context_frames < 1) throw config_error("detector.context_frames must be at least 1");
    if (shuffle_repeats < 1) throw config_error("detector.shuffle_repeats must be at least 1");
    for (const auto& a : attacks) {
        try {
            parse_attack_kind(a);
        } catch (const Error& e) {
            throw config_error(std::string("evaluation.attacks: ") + e.what());
        }
    }
    for (std::size_t i = 0; i < sweep_epsilons.size(); ++i) {
        if (!(sweep_epsilons[i] > 0.0) || (i > 0 && !(sweep_epsilons[i] > sweep_epsilons[i - 1]))) {
            throw config_error("evaluation.sweep_epsilons must be positive and strictly ascending");
        }
    }
    static const std::vector<std::string> known{"Advit", "Shuffle", "VLAD-1", "VLAD-2", "A1", "A2", "A3", "A4"};
    if (detectors.empty()) throw config_error("evaluation.detectors must not be empty");
    for (const auto& d : detectors) {
        if (std::find(known.begin(), known.end(), d) == known.end()) {
            throw config_error("evaluation.detectors: unknown detector '" + d + "'");
        }
    }
    if (bench_clips < 1) throw config_error("bench.measured_clips must be at least 1");
}

json experiment_config_to_json(const ExperimentConfig& c)
{
    json attack = c.attack;
    return json{
        {"dataset", {{"train", c.train_data}, {"eval", c.eval_data}, {"split_ratio", c.split_ratio},
                     {"split_seed", c.split_seed}}},
        {"models", {{"recognizer", c.recognizer}, {"scorer", c.scorer}}},
        {"attack", attack},
        {"detector", {{"theta", c.theta}, {"context_frames", c.context_frames},
                      {"pseudo_frames", std::string(to_string(c.pseudo_frames))},
                      {"shuffle_seed", c.shuffle_seed}, {"shuffle_repeats", c.shuffle_repeats}}},
        {"evaluation", {{"attacks", c.attacks}, {"sweep_epsilons", c.sweep_epsilons}, {"detectors", c.detectors}}},
        {"bench", {{"warmup_clips", c.bench_warmup}, {"measured_clips", c.bench_clips}}},
    };
}

ExperimentConfig experiment_config_from_json(const json& j, ExperimentConfig base)
{
    json merged = experiment_config_to_json(base);
    check_known_keys(j, merged, "");
    merged.merge_patch(j);

    ExperimentConfig c;
    try {
        c.train_data = merged.at("dataset").at("train").get<SyntheticConfig>();
        c.eval_data = merged.at("dataset").at("eval").get<SyntheticConfig>();
        c.recognizer = merged.at("models").at("recognizer").get<RecognizerConfig>();
        c.scorer = merged.at("models").at("scorer").get<ScorerConfig>();
        c.attack = merged.at("attack").get<AttackSpec>();
    } catch (const json::exception& e) {
        throw config_error(e.what());
    }
    c.split_ratio = get_field<double>(merged, "dataset", "split_ratio");
    c.split_seed = get_field<std::uint64_t>(merged, "dataset", "split_seed");
    c.theta = get_field<double>(merged, "detector", "theta");
    c.context_frames = get_field<std::size_t>(merged, "detector", "context_frames");
    c.pseudo_frames = parse_pseudo_frame_method(get_field<std::string>(merged, "detector", "pseudo_frames"));
    c.shuffle_seed = get_field<std::uint64_t>(merged, "detector", "shuffle_seed");
    c.shuffle_repeats = get_field<int>(merged, "detector", "shuffle_repeats");
    c.attacks = get_field<std::vector<std::string>>(merged, "evaluation", "attacks");
    c.sweep_epsilons = get_field<std::vector<double>>(merged, "evaluation", "sweep_epsilons");
    c.detectors = get_field<std::vector<std::string>>(merged, "evaluation", "detectors");
    c.bench_warmup = get_field<std::size_t>(merged, "bench", "warmup_clips");
    c.bench_clips = get_field<std::size_t>(merged, "bench", "measured_clips");
    c.validate();
    return c;
}

std::string config_digest(const ExperimentConfig& config)
{
    return config_digest(experiment_config_to_json(config));
}

PreparedExperiment prepare_experiment(const ExperimentConfig& config)
{
    config.validate();
    PreparedExperiment p;
    p.config = config;
    const Dataset train = generate_synthetic_dataset(config.train_data);
    p.recognizer = std::make_unique<ConvVideoClassifier>(train_recognizer(train, config.recognizer));
    p.scorer = std::make_unique<DualEncoderScorer>(train_scorer(train, config.scorer));
    p.eval_pool = generate_synthetic_dataset(config.eval_data);
    p.recognizer_accuracy = clip_accuracy(*p.recognizer, p.eval_pool);
    p.scorer_accuracy = frame_retrieval_accuracy(*p.scorer, p.eval_pool);
    p.split = split_dataset(filter_correctly_classified(p.eval_pool, *p.recognizer), config.split_ratio,
                            config.split_seed);
    return p;
}

std::vector<Detector> standard_detectors(const PreparedExperiment& p)
{
    const auto& vocab = p.recognizer->vocabulary();
    const auto n = p.config.context_frames;
    std::vector<Detector> detectors;
    detectors.push_back(make_advit_detector(*p.recognizer, p.config.pseudo_frames));
    detectors.push_back(make_shuffle_detector(*p.recognizer, p.config.shuffle_seed, p.config.shuffle_repeats));
    for (auto v : {ScoreVariant::vlad1, ScoreVariant::vlad2, ScoreVariant::a1, ScoreVariant::a2, ScoreVariant::a3,
                   ScoreVariant::a4}) {
        detectors.push_back(make_vlad_detector(*p.recognizer, *p.scorer, vocab, n, v));
    }
    return detectors;
}

}  // namespace vlad
