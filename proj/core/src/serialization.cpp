#include "vlad/serialization.hpp"

#include "vlad/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace vlad {

using nlohmann::json;

void to_json(json& j, const ThresholdModel& t)
{
    j = json{{"theta", t.theta},
             {"h", t.h},
             {"count", t.count},
             {"variant", std::string(to_string(t.variant))},
             {"created_from", t.created_from}};
}

void from_json(const json& j, ThresholdModel& t)
{
    t.theta = j.at("theta").get<double>();
    t.h = j.at("h").get<double>();
    t.count = j.at("count").get<std::size_t>();
    t.variant = parse_score_variant(j.at("variant").get<std::string>());
    t.created_from = j.at("created_from").get<std::string>();
}

void to_json(json& j, const RocPoint& p) { j = json::array({p.fpr, p.tpr}); }

void from_json(const json& j, RocPoint& p)
{
    p.fpr = j.at(0).get<double>();
    p.tpr = j.at(1).get<double>();
}

void to_json(json& j, const EvaluationReport& r)
{
    j = json{{"detector_id", r.detector_id},
             {"attack_kind", r.attack_kind},
             {"epsilon", r.epsilon},
             {"model_id", r.model_id},
             {"clean_ids", r.clean_ids},
             {"clean_scores", r.clean_scores},
             {"adv_ids", r.adv_ids},
             {"adv_scores", r.adv_scores},
             {"auc", r.auc},
             {"roc", r.roc},
             {"threshold_h", r.threshold_h},
             {"tpr_at_h", r.tpr_at_h},
             {"fpr_at_h", r.fpr_at_h}};
}

void from_json(const json& j, EvaluationReport& r)
{
    j.at("detector_id").get_to(r.detector_id);
    j.at("attack_kind").get_to(r.attack_kind);
    j.at("epsilon").get_to(r.epsilon);
    j.at("model_id").get_to(r.model_id);
    j.at("clean_ids").get_to(r.clean_ids);
    j.at("clean_scores").get_to(r.clean_scores);
    j.at("adv_ids").get_to(r.adv_ids);
    j.at("adv_scores").get_to(r.adv_scores);
    j.at("auc").get_to(r.auc);
    j.at("roc").get_to(r.roc);
    j.at("threshold_h").get_to(r.threshold_h);
    j.at("tpr_at_h").get_to(r.tpr_at_h);
    j.at("fpr_at_h").get_to(r.fpr_at_h);
}

void to_json(json& j, const FpsReport& r)
{
    j = json{{"hardware", r.hardware},
             {"fps", r.fps},
             {"clips", r.clips},
             {"frames", r.frames},
             {"seconds", r.seconds},
             {"config_digest", r.config_digest}};
}

void from_json(const json& j, FpsReport& r)
{
    j.at("hardware").get_to(r.hardware);
    j.at("fps").get_to(r.fps);
    j.at("clips").get_to(r.clips);
    j.at("frames").get_to(r.frames);
    j.at("seconds").get_to(r.seconds);
    j.at("config_digest").get_to(r.config_digest);
}

void to_json(json& j, const AttackSpec& s)
{
    j = json{{"kind", std::string(to_string(s.kind))},
             {"epsilon", s.epsilon},
             {"steps", s.steps},
             {"step_size", s.step_size > 0.0 ? json(s.step_size) : json(nullptr)},  // null: epsilon / 4
             {"frame_selection", "grad_mass"},
             {"seed", s.seed}};
}

void from_json(const json& j, AttackSpec& s)
{
    if (j.contains("kind")) s.kind = parse_attack_kind(j.at("kind").get<std::string>());
    s.epsilon = j.value("epsilon", s.epsilon);
    s.steps = j.value("steps", s.steps);
    if (j.contains("step_size")) s.step_size = j.at("step_size").is_null() ? 0.0 : j.at("step_size").get<double>();
    s.seed = j.value("seed", s.seed);
    if (j.contains("frame_selection") && j.at("frame_selection").get<std::string>() != "grad_mass") {
        throw config_error("attack.frame_selection must be \"grad_mass\"");
    }
}

void to_json(json& j, const SyntheticConfig& c)
{
    j = json{{"n_classes", c.n_classes},
             {"clips_per_class", c.clips_per_class},
             {"n_frames", c.n_frames},
             {"height", c.height},
             {"width", c.width},
             {"channels", c.channels},
             {"seed", c.seed},
             {"id_prefix", c.id_prefix}};
}

void from_json(const json& j, SyntheticConfig& c)
{
    c.n_classes = j.value("n_classes", c.n_classes);
    c.clips_per_class = j.value("clips_per_class", c.clips_per_class);
    c.n_frames = j.value("n_frames", c.n_frames);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.channels = j.value("channels", c.channels);
    c.seed = j.value("seed", c.seed);
    c.id_prefix = j.value("id_prefix", c.id_prefix);
}

void write_json_file(const std::string& path, json value, const std::string& config_digest)
{
    if (value.is_object()) value["config_digest"] = config_digest;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << value.dump(2) << '\n';
    if (!out) throw io_error("failed writing '" + path + "'");
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw io_error("'" + path + "' is not valid JSON: " + e.what());
    }
}

std::vector<ScoreRow> score_rows(const EvaluationReport& report, ScoreVariant variant)
{
    std::vector<ScoreRow> rows;
    for (std::size_t i = 0; i < report.clean_scores.size(); ++i) {
        rows.push_back({report.clean_ids.at(i), report.detector_id, variant, report.clean_scores[i], false});
    }
    for (std::size_t i = 0; i < report.adv_scores.size(); ++i) {
        rows.push_back({report.adv_ids.at(i), report.detector_id, variant, report.adv_scores[i], true});
    }
    return rows;
}

std::string scores_csv(const std::vector<ScoreRow>& rows, const std::string& config_digest)
{
    std::ostringstream out;
    out << "# config_digest: " << config_digest << '\n';
    out << "video_id,detector,variant,score,is_adversarial\n";
    char buf[32];
    for (const auto& r : rows) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), r.score);
        out << r.video_id << ',' << r.detector << ',' << to_string(r.variant) << ',' << std::string_view(buf, res.ptr - buf)
            << ','
            << (r.is_adversarial ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace vlad
