#include "vlad/manifest.hpp"

#include "vlad/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace vlad {

namespace {

template <typename Record, typename Encode>
void write_lines(const std::filesystem::path& path, const std::vector<Record>& records, Encode encode,
                 const std::string& digest)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open manifest '" + path.string() + "' for writing");
    for (const auto& r : records) {
        nlohmann::json j = encode(r);
        j["schema_version"] = kManifestSchemaVersion;
        j["config_digest"] = digest;
        out << j.dump() << '\n';
    }
    if (!out) throw io_error("failed writing manifest '" + path.string() + "'");
}

template <typename Decode>
auto read_lines(const std::filesystem::path& path, Decode decode)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open manifest '" + path.string() + "'");
    std::vector<decltype(decode(nlohmann::json{}))> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const int version = j.at("schema_version").get<int>();
            if (version != kManifestSchemaVersion) {
                throw io_error("'" + path.string() + "' line " + std::to_string(lineno) + ": schema_version " +
                               std::to_string(version) + " is not supported");
            }
            records.push_back(decode(j));
        } catch (const nlohmann::json::exception& e) {
            throw io_error("'" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace

void write_clip_manifest(const std::filesystem::path& path,
                         const std::vector<ClipRecord>& records,
                         const std::string& config_digest)
{
    write_lines(
        path, records,
        [](const ClipRecord& r) {
            return nlohmann::json{{"video_id", r.video_id}, {"label", r.label}, {"path", r.path}, {"split", r.split}};
        },
        config_digest);
}

std::vector<ClipRecord> read_clip_manifest(const std::filesystem::path& path)
{
    return read_lines(path, [](const nlohmann::json& j) {
        return ClipRecord{j.at("video_id").get<std::string>(), j.at("label").get<std::string>(),
                          j.at("path").get<std::string>(), j.at("split").get<std::string>()};
    });
}

void write_adversarial_manifest(const std::filesystem::path& path,
                                const std::vector<AdversarialRecord>& records,
                                const std::string& config_digest)
{
    write_lines(
        path, records,
        [](const AdversarialRecord& r) {
            return nlohmann::json{{"video_id", r.video_id},
                                  {"attack", std::string(to_string(r.attack))},
                                  {"epsilon", r.epsilon},
                                  {"steps", r.steps},
                                  {"step_size", r.step_size},
                                  {"seed", r.seed},
                                  {"success", r.success},
                                  {"label", r.label},
                                  {"original_label", r.original_label},
                                  {"predicted_label", r.predicted_label},
                                  {"perturbation_linf", r.perturbation_linf},
                                  {"path", r.path}};
        },
        config_digest);
}

std::vector<AdversarialRecord> read_adversarial_manifest(const std::filesystem::path& path)
{
    return read_lines(path, [](const nlohmann::json& j) {
        AdversarialRecord r;
        r.video_id = j.at("video_id").get<std::string>();
        r.attack = parse_attack_kind(j.at("attack").get<std::string>());
        r.epsilon = j.at("epsilon").get<double>();
        r.steps = j.at("steps").get<int>();
        r.step_size = j.at("step_size").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.success = j.at("success").get<bool>();
        r.label = j.at("label").get<std::string>();
        r.original_label = j.at("original_label").get<std::size_t>();
        r.predicted_label = j.at("predicted_label").get<std::size_t>();
        r.perturbation_linf = j.at("perturbation_linf").get<double>();
        r.path = j.at("path").get<std::string>();
        return r;
    });
}

std::filesystem::path resolve_record_path(const std::filesystem::path& manifest, const std::string& record_path)
{
    std::filesystem::path p(record_path);
    if (p.is_absolute()) return p;
    return manifest.parent_path() / p;
}

}  // namespace vlad
