#pragma once

// Self-describing binary container for trained models. Layout is documented
// in docs/checkpoint_format.md; readers reject a different major version.

#include "vlad/nn_ops.hpp"
#include "vlad/video.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vlad {

inline constexpr std::uint32_t kCheckpointMajorVersion = 1;
inline constexpr std::uint32_t kCheckpointMinorVersion = 0;

struct Checkpoint {
    std::string contract_type;  ///< "recognizer" or "scorer"
    std::string model_type;     ///< implementation name, e.g. "conv_video_classifier"
    LabelVocabulary vocabulary;
    std::uint64_t seed = 0;
    std::string config_digest;
    nlohmann::json config;  ///< hyper-parameters the digest was taken over
    nlohmann::json state;   ///< training progress (epochs, optimizer step, ...)
    std::vector<ParameterTensor> arrays;

    const ParameterTensor& array(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Digest of a JSON config in its canonical (sorted-key, compact) dump.
std::string config_digest(const nlohmann::json& config);

}  // namespace vlad
