#include "vlad/detector.hpp"

#include "vlad/digest.hpp"
#include "vlad/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace vlad {

namespace {

void require_same_size(const ClassProbabilities& p, const ClassProbabilities& q)
{
    if (p.size() != q.size()) {
        throw validation_error("probability vectors differ in length: " + std::to_string(p.size()) + " vs " +
                               std::to_string(q.size()));
    }
}

std::vector<double> l2_normalized(std::span<const double> p)
{
    double norm = 0.0;
    for (double v : p) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<double> out(p.begin(), p.end());
    for (double& v : out) v /= norm;
    return out;
}

double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

double l1_distance(std::span<const double> a, std::span<const double> b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum;
}

}  // namespace

ClassProbabilities::ClassProbabilities(std::vector<double> values, std::string vocabulary_id)
    : values_(std::move(values)), vocabulary_id_(std::move(vocabulary_id))
{
    if (values_.size() < 2) {
        throw validation_error("class probabilities need at least 2 classes, got " + std::to_string(values_.size()));
    }
    double sum = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw validation_error("class probabilities must be finite and non-negative");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw validation_error("class probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
}

std::size_t ClassProbabilities::argmax() const noexcept
{
    // max_element returns the first of equal maxima.
    return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

SimilarityMatrix::SimilarityMatrix(std::size_t frames, std::size_t labels, std::vector<double> values)
    : frames_(frames), labels_(labels), values_(std::move(values))
{
    if (frames_ < 1 || labels_ < 2) {
        throw validation_error("similarity matrix needs N >= 1 and M >= 2, got " + std::to_string(frames_) + "x" +
                               std::to_string(labels_));
    }
    if (values_.size() != frames_ * labels_) {
        throw validation_error("similarity matrix buffer size mismatch");
    }
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
        throw validation_error("similarity matrix contains non-finite entries");
    }
}

std::string_view to_string(ScoreVariant variant) noexcept
{
    switch (variant) {
    case ScoreVariant::vlad1: return "VLAD1";
    case ScoreVariant::vlad2: return "VLAD2";
    case ScoreVariant::a1: return "A1";
    case ScoreVariant::a2: return "A2";
    case ScoreVariant::a3: return "A3";
    case ScoreVariant::a4: return "A4";
    case ScoreVariant::advit: return "ADVIT";
    case ScoreVariant::shuffle: return "SHUFFLE";
    }
    return "UNKNOWN";
}

ScoreVariant parse_score_variant(std::string_view name)
{
    std::string upper;
    for (char c : name) {
        if (c != '-' && c != '_') upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    for (auto v : {ScoreVariant::vlad1, ScoreVariant::vlad2, ScoreVariant::a1, ScoreVariant::a2, ScoreVariant::a3,
                   ScoreVariant::a4, ScoreVariant::advit, ScoreVariant::shuffle}) {
        if (upper == to_string(v)) return v;
    }
    throw validation_error("unknown score variant '" + std::string(name) + "'");
}

std::vector<double> average_similarity(const SimilarityMatrix& similarities)
{
    // The constructor already rejected non-finite entries.
    const std::size_t n = similarities.frame_count();
    const std::size_t m = similarities.label_count();
    std::vector<double> mean(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = similarities.row(i);
        for (std::size_t j = 0; j < m; ++j) mean[j] += row[j];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    return mean;
}

ClassProbabilities context_probabilities(std::span<const double> similarity, std::string vocabulary_id)
{
    if (similarity.size() < 2) {
        throw validation_error("similarity vector needs at least 2 entries");
    }
    if (!std::all_of(similarity.begin(), similarity.end(), [](double v) { return std::isfinite(v); })) {
        throw validation_error("similarity vector contains non-finite entries");
    }
    const double peak = max_of(similarity);
    std::vector<double> p(similarity.size());
    double total = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        p[j] = std::exp(similarity[j] - peak);
        total += p[j];
    }
    for (double& v : p) v /= total;
    return ClassProbabilities(std::move(p), std::move(vocabulary_id));
}

std::vector<double> clamp_and_renormalize(std::span<const double> p)
{
    std::vector<double> out(p.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        out[i] = std::max(p[i], kProbabilityFloor);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

double symmetric_kl(const ClassProbabilities& p, const ClassProbabilities& q)
{
    require_same_size(p, q);
    const auto pc = clamp_and_renormalize(p.values());
    const auto qc = clamp_and_renormalize(q.values());
    double sum = 0.0;
    for (std::size_t i = 0; i < pc.size(); ++i) {
        sum += (pc[i] - qc[i]) * (std::log(pc[i]) - std::log(qc[i]));
    }
    return 0.5 * sum;
}

ClassProbabilities one_hot(const ClassProbabilities& p)
{
    const std::size_t m = p.size();
    std::vector<double> out(m, kProbabilityFloor);
    out[p.argmax()] = 1.0 - static_cast<double>(m - 1) * kProbabilityFloor;
    return ClassProbabilities(std::move(out), p.vocabulary_id());
}

DetectionScore detection_score(const ClassProbabilities& pa, const ClassProbabilities& pc, ScoreVariant variant)
{
    require_same_size(pa, pc);
    double value = 0.0;
    switch (variant) {
    case ScoreVariant::vlad1:
        value = symmetric_kl(pa, pc);
        break;
    case ScoreVariant::vlad2:
        value = symmetric_kl(one_hot(pa), pc);
        break;
    case ScoreVariant::a1:
        value = std::abs(max_of(l2_normalized(pa.values())) - max_of(l2_normalized(pc.values())));
        break;
    case ScoreVariant::a2:
        value = std::abs(pa.max() - pc.max());
        break;
    case ScoreVariant::a3:
        value = l1_distance(l2_normalized(pa.values()), l2_normalized(pc.values()));
        break;
    case ScoreVariant::a4:
        value = l1_distance(pa.values(), pc.values());
        break;
    default:
        throw validation_error("score variant " + std::string(to_string(variant)) +
                               " is not a recognizer/context statistic");
    }
    return {value, variant};
}

ThresholdModel calibrate_threshold(std::span<const double> clean_scores, double theta, ScoreVariant variant)
{
    if (clean_scores.empty()) {
        throw validation_error("threshold calibration needs at least one clean score");
    }
    if (!(theta > 0.0 && theta <= 100.0)) {
        throw validation_error("theta must lie in (0, 100], got " + std::to_string(theta));
    }
    if (!std::all_of(clean_scores.begin(), clean_scores.end(), [](double v) { return std::isfinite(v); })) {
        throw validation_error("calibration scores must be finite");
    }
    std::vector<double> sorted(clean_scores.begin(), clean_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const auto k = static_cast<std::ptrdiff_t>(sorted.size());
    auto position = static_cast<std::ptrdiff_t>(std::floor(static_cast<double>(k) * theta / 100.0));
    position = std::clamp<std::ptrdiff_t>(position, 1, k);

    ThresholdModel model;
    model.theta = theta;
    model.h = sorted[static_cast<std::size_t>(position - 1)];
    model.count = sorted.size();
    model.variant = variant;
    model.created_from = digest_of_scores(sorted);
    return model;
}

DetectionDecision decide(const DetectionScore& score, double threshold)
{
    return {score.value > threshold, score, threshold};
}

}  // namespace vlad
