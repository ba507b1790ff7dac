#pragma once

// Detection statistics: frame-averaged similarity, context softmax,
// symmetric KL, the one-hot variant, the four ablation scores, percentile
// threshold calibration and the decision rule. Everything here is a pure
// function of its arguments and computes in double precision.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vlad {

/// Every probability is clamped to this floor (then renormalised) before a
/// logarithm is taken, and the smoothed one-hot uses it for off-argmax mass.
inline constexpr double kProbabilityFloor = 1e-12;

/// Default percentile for threshold calibration.
inline constexpr double kDefaultTheta = 90.0;

class ClassProbabilities {
public:
    /// Throws unless M >= 2, entries are finite and >= 0 and sum to 1 within 1e-6.
    explicit ClassProbabilities(std::vector<double> values, std::string vocabulary_id = {});

    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::string& vocabulary_id() const noexcept { return vocabulary_id_; }

    /// Index of the largest entry; the lowest index wins ties.
    std::size_t argmax() const noexcept;
    double max() const noexcept { return values_[argmax()]; }

    friend bool operator==(const ClassProbabilities&, const ClassProbabilities&) = default;

private:
    std::vector<double> values_;
    std::string vocabulary_id_;
};

/// Raw frame-label similarity scores, N frames x M labels, row-major.
class SimilarityMatrix {
public:
    /// Throws unless N >= 1, M >= 2, the buffer is N*M long and all entries are finite.
    SimilarityMatrix(std::size_t frames, std::size_t labels, std::vector<double> values);

    std::size_t frame_count() const noexcept { return frames_; }
    std::size_t label_count() const noexcept { return labels_; }
    double at(std::size_t frame, std::size_t label) const { return values_[frame * labels_ + label]; }
    std::span<const double> row(std::size_t frame) const
    {
        return std::span<const double>(values_).subspan(frame * labels_, labels_);
    }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::size_t frames_;
    std::size_t labels_;
    std::vector<double> values_;
};

enum class ScoreVariant {
    vlad1,  ///< symmetric KL(p_a, p_c)
    vlad2,  ///< symmetric KL(one_hot(p_a), p_c)
    a1,     ///< |max(p_a/|p_a|) - max(p_c/|p_c|)|
    a2,     ///< |max(p_a) - max(p_c)|
    a3,     ///< sum |p_a/|p_a| - p_c/|p_c||
    a4,     ///< sum |p_a - p_c|
    advit,  ///< pseudo-frame consistency baseline
    shuffle ///< frame-shuffle consistency baseline
};

std::string_view to_string(ScoreVariant variant) noexcept;
/// Accepts the names produced by to_string ("VLAD1", "A3", ...), case-insensitive.
ScoreVariant parse_score_variant(std::string_view name);

struct DetectionScore {
    double value = 0.0;
    ScoreVariant variant = ScoreVariant::vlad1;

    friend bool operator==(const DetectionScore&, const DetectionScore&) = default;
};

struct ThresholdModel {
    double theta = kDefaultTheta;
    double h = 0.0;
    std::size_t count = 0;  ///< K, number of calibration scores
    ScoreVariant variant = ScoreVariant::vlad1;
    std::string created_from;  ///< digest of the ascending-sorted calibration scores

    friend bool operator==(const ThresholdModel&, const ThresholdModel&) = default;
};

struct DetectionDecision {
    bool adversarial = false;
    DetectionScore score;
    double threshold = 0.0;

    friend bool operator==(const DetectionDecision&, const DetectionDecision&) = default;
};

/// Column means of S: the clip-level similarity vector.
std::vector<double> average_similarity(const SimilarityMatrix& similarities);

/// Max-subtracted softmax of a finite similarity vector.
ClassProbabilities context_probabilities(std::span<const double> similarity, std::string vocabulary_id = {});

/// Clamp to kProbabilityFloor and renormalise.
std::vector<double> clamp_and_renormalize(std::span<const double> p);

/// 0.5 * [KL(p||q) + KL(q||p)] on clamped inputs. Evaluated as
/// 0.5 * sum (p_i - q_i)(ln p_i - ln q_i), which is bitwise symmetric and
/// term-wise non-negative.
double symmetric_kl(const ClassProbabilities& p, const ClassProbabilities& q);

/// Smoothed one-hot of the argmax: 1-(M-1)*floor at the argmax, floor elsewhere.
ClassProbabilities one_hot(const ClassProbabilities& p);

DetectionScore detection_score(const ClassProbabilities& recognizer_probs,
                               const ClassProbabilities& context_probs,
                               ScoreVariant variant);

/// Sorts the scores ascending and picks the 1-based order statistic at
/// clamp(floor(K*theta/100), 1, K). No interpolation.
ThresholdModel calibrate_threshold(std::span<const double> clean_scores,
                                   double theta = kDefaultTheta,
                                   ScoreVariant variant = ScoreVariant::vlad1);

/// Adversarial iff score > threshold; the boundary is clean.
DetectionDecision decide(const DetectionScore& score, double threshold);

}  // namespace vlad
