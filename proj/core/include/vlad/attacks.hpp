#pragma once

// White-box L-infinity attacks against any Recognizer with gradient access.
// All attacks maximise the cross-entropy of the true label (untargeted) and
// keep every output inside [0,1] and the epsilon ball around the input.

#include "vlad/models.hpp"
#include "vlad/video.hpp"

#include <cstdint>
#include <span>
#include <string_view>

namespace vlad {

enum class AttackKind { fgsm_v, pgd_v, one_frame, flick };

std::string_view to_string(AttackKind kind) noexcept;
/// Accepts "FGSM-v", "fgsm_v", "PGD-v", "OFA", "one_frame", "Flick", ...
AttackKind parse_attack_kind(std::string_view name);

enum class FrameSelection { grad_mass };

inline constexpr int kDefaultAttackSteps = 10;

struct AttackSpec {
    AttackKind kind = AttackKind::pgd_v;
    double epsilon = 0.03;
    int steps = kDefaultAttackSteps;
    double step_size = 0.0;  ///< <= 0 selects epsilon / 4
    FrameSelection frame_selection = FrameSelection::grad_mass;
    std::uint64_t seed = 0;  ///< recorded for provenance; no attack here draws random numbers

    double effective_step_size() const noexcept { return step_size > 0.0 ? step_size : epsilon / 4.0; }
    /// Throws unless epsilon > 0 and steps >= 1.
    void validate() const;
};

struct AdversarialResult {
    VideoTensor adversarial_video;
    std::size_t original_label = 0;
    std::size_t predicted_label = 0;
    bool success = false;
    double perturbation_linf = 0.0;
};

AdversarialResult fgsm_video(const Recognizer& model, const VideoTensor& video, std::size_t label, double epsilon);

AdversarialResult pgd_video(const Recognizer& model,
                            const VideoTensor& video,
                            std::size_t label,
                            double epsilon,
                            int steps = kDefaultAttackSteps,
                            double step_size = 0.0);

/// Picks the frame with the largest gradient L1 mass, then runs PGD on that
/// frame only. Every other frame is copied bit for bit.
AdversarialResult one_frame_attack(const Recognizer& model,
                                   const VideoTensor& video,
                                   std::size_t label,
                                   double epsilon,
                                   int steps = kDefaultAttackSteps,
                                   double step_size = 0.0);

/// One RGB offset per frame, broadcast over all pixels. The offset is kept
/// where every pixel of the frame stays inside [0,1], so no clipping occurs
/// and X_adv - X is spatially constant per frame and channel. Offsets are
/// snapped to multiples of 2^-24; for inputs on that grid (all synthetic
/// clips) the additions are exact.
AdversarialResult flickering_attack(const Recognizer& model,
                                    const VideoTensor& video,
                                    std::size_t label,
                                    double epsilon,
                                    int steps = kDefaultAttackSteps,
                                    double step_size = 0.0);

AdversarialResult run_attack(const Recognizer& model, const VideoTensor& video, std::size_t label, const AttackSpec& spec);

/// Frame index with the largest sum of |gradient|; lowest index wins ties.
std::size_t select_frame_by_gradient_mass(std::span<const double> gradient, const VideoShape& shape);

/// max |a - b| over all intensities.
double linf_distance(const VideoTensor& a, const VideoTensor& b);

}  // namespace vlad
