#pragma once

#include "vlad/attacks.hpp"
#include "vlad/baselines.hpp"
#include "vlad/datagen.hpp"
#include "vlad/detector.hpp"
#include "vlad/models.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vlad {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;

    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocResult {
    double auc = 0.0;
    std::vector<RocPoint> roc;
};

/// P(adv > clean) + 0.5 * P(adv == clean) over all pairs, from exact counts.
double mann_whitney_auc(std::span<const double> clean_scores, std::span<const double> adv_scores);

/// Sweeps every distinct score as a ">= t is adversarial" threshold, from
/// (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> clean_scores, std::span<const double> adv_scores);

/// Trapezoidal area under a ROC polyline.
double roc_area(std::span<const RocPoint> roc);

/// Mann-Whitney AUC plus the swept ROC. Throws on empty or non-finite input.
RocResult roc_auc(std::span<const double> clean_scores, std::span<const double> adv_scores);

/// A named score function over clips. Every detector in a comparison runs
/// through the same calibration and evaluation code.
struct Detector {
    std::string id;
    ScoreVariant variant = ScoreVariant::vlad1;
    std::function<DetectionScore(const VideoTensor&)> score;
};

inline const std::vector<std::string> kGridDetectorOrder{"Advit", "Shuffle", "VLAD-1", "VLAD-2"};

/// Display id for a variant: "VLAD-1", "VLAD-2", "A1".."A4", "Advit", "Shuffle".
std::string detector_id(ScoreVariant variant);

Detector make_vlad_detector(const Recognizer& recognizer,
                            const FrameLabelScorer& scorer,
                            const LabelVocabulary& vocabulary,
                            std::size_t context_frames,
                            ScoreVariant variant);
Detector make_advit_detector(const Recognizer& recognizer, PseudoFrameMethod method = PseudoFrameMethod::neighbor_mean);
/// The permutation seed for each clip mixes `seed` with a digest of its video_id.
Detector make_shuffle_detector(const Recognizer& recognizer, std::uint64_t seed, int repeats = 1);

struct EvaluationReport {
    std::string detector_id;
    std::string attack_kind;
    double epsilon = 0.0;
    std::string model_id;
    std::vector<std::string> clean_ids;
    std::vector<double> clean_scores;
    std::vector<std::string> adv_ids;
    std::vector<double> adv_scores;
    double auc = 0.0;
    std::vector<RocPoint> roc;
    double threshold_h = 0.0;
    double tpr_at_h = 0.0;
    double fpr_at_h = 0.0;

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// Builds a report from precomputed scores; the operating point applies
/// decide() at threshold_h.
EvaluationReport make_report(std::string detector_id,
                             std::string attack_kind,
                             double epsilon,
                             std::string model_id,
                             std::vector<std::string> clean_ids,
                             std::vector<double> clean_scores,
                             std::vector<std::string> adv_ids,
                             std::vector<double> adv_scores,
                             double threshold_h);

EvaluationReport evaluate_detector(const Detector& detector,
                                   const PairedTestSet& pairs,
                                   const ThresholdModel& threshold,
                                   const std::string& model_id);

/// Scores `clips` and calibrates at `theta`.
ThresholdModel calibrate_detector(const Detector& detector, std::span<const LabeledClip> clips, double theta);

struct SweepTable {
    std::string attack_kind;
    std::vector<double> epsilons;
    std::vector<std::string> detector_ids;
    std::vector<std::vector<EvaluationReport>> reports;  ///< [detector][epsilon]

    /// max - min AUC over epsilons for one detector.
    double auc_spread(const std::string& detector_id) const;
    /// CSV with header "epsilon,<detector ids...>" and one row per epsilon.
    std::string to_csv() const;
};

/// One evaluation per (detector, epsilon). `build_pairs` produces the paired
/// test set for a given epsilon; thresholds are indexed by detector id.
SweepTable strength_sweep(std::span<const Detector> detectors,
                          AttackKind attack_kind,
                          std::span<const double> epsilons,
                          const std::function<PairedTestSet(double)>& build_pairs,
                          const std::map<std::string, ThresholdModel>& thresholds,
                          const std::string& model_id);

struct ConfidenceStats {
    double mean = 0.0;
    double stddev = 0.0;  ///< population standard deviation
    std::size_t count = 0;
};

/// Statistics of max(p_a) over successful adversarial clips.
ConfidenceStats wrong_confidence_stats(const Recognizer& model, std::span<const AdversarialResult> adversarial);
ConfidenceStats wrong_confidence_stats(const Recognizer& model, const PairedTestSet& pairs);
/// Mean and population std of a value list.
ConfidenceStats mean_and_stddev(std::span<const double> values);

enum class GroupBy { attack, model, detector, epsilon };

struct AggregateRow {
    std::string group;
    std::string detector_id;
    double mean_auc = 0.0;
    std::size_t count = 0;
};

/// Mean AUC per (group key, detector), rows sorted by group then detector.
std::vector<AggregateRow> aggregate(std::span<const EvaluationReport> reports, GroupBy group_by);

/// Rows = (attack, epsilon, model), columns = detectors in `detector_order`
/// followed by any other detector ids in sorted order. Missing cells are empty.
std::string grid_table_csv(std::span<const EvaluationReport> reports,
                           const std::vector<std::string>& detector_order = kGridDetectorOrder);

}  // namespace vlad
