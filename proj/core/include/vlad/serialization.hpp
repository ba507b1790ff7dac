#pragma once
// JSON forms of the records written to disk, and the scores CSV.

#include "vlad/attacks.hpp"
#include "vlad/datagen.hpp"
#include "vlad/detector.hpp"
#include "vlad/evaluation.hpp"
#include "vlad/fps.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace vlad {

void to_json(nlohmann::json& j, const ThresholdModel& t);
void from_json(const nlohmann::json& j, ThresholdModel& t);

void to_json(nlohmann::json& j, const RocPoint& p);
void from_json(const nlohmann::json& j, RocPoint& p);

void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);

void to_json(nlohmann::json& j, const FpsReport& r);
void from_json(const nlohmann::json& j, FpsReport& r);

/// Missing keys keep their defaults.
void to_json(nlohmann::json& j, const AttackSpec& s);
void from_json(const nlohmann::json& j, AttackSpec& s);

void to_json(nlohmann::json& j, const SyntheticConfig& c);
void from_json(const nlohmann::json& j, SyntheticConfig& c);

/// Writes `value` to `path` as indented JSON with `config_digest` added at the
/// top level. Throws an io error on failure.
void write_json_file(const std::string& path, nlohmann::json value, const std::string& config_digest);
nlohmann::json read_json_file(const std::string& path);

struct ScoreRow {
    std::string video_id;
    std::string detector;
    ScoreVariant variant = ScoreVariant::vlad1;
    double score = 0.0;
    bool is_adversarial = false;
};

/// Rows for every clip of a report: clean first, then adversarial.
std::vector<ScoreRow> score_rows(const EvaluationReport& report, ScoreVariant variant);

/// "video_id,detector,variant,score,is_adversarial" plus one line per row,
/// preceded by a "# config_digest: ..." comment line.
std::string scores_csv(const std::vector<ScoreRow>& rows, const std::string& config_digest);

}  // namespace vlad
