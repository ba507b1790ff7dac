#pragma once

// Line-delimited JSON manifests. Every record carries "schema_version" and
// the digest of the config that produced it.

#include "vlad/attacks.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace vlad {

inline constexpr int kManifestSchemaVersion = 1;

struct ClipRecord {
    std::string video_id;
    std::string label;  ///< class label text
    std::string path;   ///< relative to the manifest's directory, or absolute
    std::string split;  ///< "train", "pool", "calibration", "test"

    friend bool operator==(const ClipRecord&, const ClipRecord&) = default;
};

struct AdversarialRecord {
    std::string video_id;
    AttackKind attack = AttackKind::pgd_v;
    double epsilon = 0.0;
    int steps = 0;
    double step_size = 0.0;
    std::uint64_t seed = 0;
    bool success = false;
    std::string label;
    std::size_t original_label = 0;
    std::size_t predicted_label = 0;
    double perturbation_linf = 0.0;
    std::string path;  ///< adversarial clip; empty for failed attacks

    friend bool operator==(const AdversarialRecord&, const AdversarialRecord&) = default;
};

void write_clip_manifest(const std::filesystem::path& path,
                         const std::vector<ClipRecord>& records,
                         const std::string& config_digest);
std::vector<ClipRecord> read_clip_manifest(const std::filesystem::path& path);

void write_adversarial_manifest(const std::filesystem::path& path,
                                const std::vector<AdversarialRecord>& records,
                                const std::string& config_digest);
std::vector<AdversarialRecord> read_adversarial_manifest(const std::filesystem::path& path);

/// Resolves a record path against the manifest location.
std::filesystem::path resolve_record_path(const std::filesystem::path& manifest, const std::string& record_path);

}  // namespace vlad
