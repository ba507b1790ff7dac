#include "vlad/evaluation.hpp"

#include "vlad/digest.hpp"
#include "vlad/error.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <set>
#include <sstream>
#include <tuple>

namespace vlad {

namespace {

void check_scores(std::span<const double> clean, std::span<const double> adv)
{
    if (clean.empty() || adv.empty()) {
        throw validation_error("ROC/AUC needs non-empty clean and adversarial score lists");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(clean.begin(), clean.end(), finite) || !std::all_of(adv.begin(), adv.end(), finite)) {
        throw validation_error("ROC/AUC scores must be finite");
    }
}

// Shortest text that reads back to the same double.
std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t clip_seed(std::uint64_t seed, const std::string& video_id)
{
    const std::string hex = sha256_hex(video_id).substr(0, 16);
    return seed ^ std::stoull(hex, nullptr, 16);
}

}  // namespace

double mann_whitney_auc(std::span<const double> clean, std::span<const double> adv)
{
    check_scores(clean, adv);
    std::vector<double> sorted(clean.begin(), clean.end());
    std::sort(sorted.begin(), sorted.end());
    // Integer counts keep the statistic exact up to the final division.
    unsigned long long twice_wins = 0;
    for (double a : adv) {
        const auto below = static_cast<unsigned long long>(std::lower_bound(sorted.begin(), sorted.end(), a) - sorted.begin());
        const auto upto = static_cast<unsigned long long>(std::upper_bound(sorted.begin(), sorted.end(), a) - sorted.begin());
        twice_wins += 2 * below + (upto - below);
    }
    return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(clean.size()) * static_cast<double>(adv.size()));
}

std::vector<RocPoint> roc_curve(std::span<const double> clean, std::span<const double> adv)
{
    check_scores(clean, adv);
    std::vector<double> c(clean.begin(), clean.end());
    std::vector<double> a(adv.begin(), adv.end());
    std::sort(c.begin(), c.end(), std::greater<>());
    std::sort(a.begin(), a.end(), std::greater<>());
    std::vector<double> thresholds(c.begin(), c.end());
    thresholds.insert(thresholds.end(), a.begin(), a.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<RocPoint> roc{{0.0, 0.0}};
    std::size_t ci = 0;
    std::size_t ai = 0;
    const auto nc = static_cast<double>(c.size());
    const auto na = static_cast<double>(a.size());
    for (double t : thresholds) {
        while (ci < c.size() && c[ci] >= t) ++ci;
        while (ai < a.size() && a[ai] >= t) ++ai;
        roc.push_back({static_cast<double>(ci) / nc, static_cast<double>(ai) / na});
    }
    return roc;
}

double roc_area(std::span<const RocPoint> roc)
{
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
    }
    return area;
}

RocResult roc_auc(std::span<const double> clean, std::span<const double> adv)
{
    return {mann_whitney_auc(clean, adv), roc_curve(clean, adv)};
}

std::string detector_id(ScoreVariant variant)
{
    switch (variant) {
    case ScoreVariant::vlad1: return "VLAD-1";
    case ScoreVariant::vlad2: return "VLAD-2";
    case ScoreVariant::advit: return "Advit";
    case ScoreVariant::shuffle: return "Shuffle";
    default: return std::string(to_string(variant));
    }
}

Detector make_vlad_detector(const Recognizer& recognizer,
                            const FrameLabelScorer& scorer,
                            const LabelVocabulary& vocabulary,
                            std::size_t context_frames,
                            ScoreVariant variant)
{
    if (variant == ScoreVariant::advit || variant == ScoreVariant::shuffle) {
        throw validation_error("VLAD detectors take VLAD1, VLAD2 or A1-A4");
    }
    return {detector_id(variant), variant,
            [&recognizer, &scorer, vocabulary, context_frames, variant](const VideoTensor& video) {
                const auto pa = checked_predict(recognizer, video);
                const auto pc = context_pipeline(video, scorer, vocabulary, context_frames);
                return detection_score(pa, pc, variant);
            }};
}

Detector make_advit_detector(const Recognizer& recognizer, PseudoFrameMethod method)
{
    return {"Advit", ScoreVariant::advit,
            [&recognizer, method](const VideoTensor& video) { return advit_score(recognizer, video, method); }};
}

Detector make_shuffle_detector(const Recognizer& recognizer, std::uint64_t seed, int repeats)
{
    return {"Shuffle", ScoreVariant::shuffle, [&recognizer, seed, repeats](const VideoTensor& video) {
                return shuffle_score(recognizer, video, clip_seed(seed, video.video_id()), repeats);
            }};
}

EvaluationReport make_report(std::string detector_id,
                             std::string attack_kind,
                             double epsilon,
                             std::string model_id,
                             std::vector<std::string> clean_ids,
                             std::vector<double> clean_scores,
                             std::vector<std::string> adv_ids,
                             std::vector<double> adv_scores,
                             double threshold_h)
{
    auto roc = roc_auc(clean_scores, adv_scores);
    EvaluationReport r;
    r.detector_id = std::move(detector_id);
    r.attack_kind = std::move(attack_kind);
    r.epsilon = epsilon;
    r.model_id = std::move(model_id);
    r.auc = roc.auc;
    r.roc = std::move(roc.roc);
    r.threshold_h = threshold_h;
    std::size_t tp = 0;
    for (double s : adv_scores) tp += decide({s, ScoreVariant::vlad1}, threshold_h).adversarial ? 1 : 0;
    std::size_t fp = 0;
    for (double s : clean_scores) fp += decide({s, ScoreVariant::vlad1}, threshold_h).adversarial ? 1 : 0;
    r.tpr_at_h = static_cast<double>(tp) / static_cast<double>(adv_scores.size());
    r.fpr_at_h = static_cast<double>(fp) / static_cast<double>(clean_scores.size());
    r.clean_ids = std::move(clean_ids);
    r.clean_scores = std::move(clean_scores);
    r.adv_ids = std::move(adv_ids);
    r.adv_scores = std::move(adv_scores);
    return r;
}

EvaluationReport evaluate_detector(const Detector& detector,
                                   const PairedTestSet& pairs,
                                   const ThresholdModel& threshold,
                                   const std::string& model_id)
{
    std::vector<std::string> clean_ids, adv_ids;
    std::vector<double> clean_scores, adv_scores;
    for (const auto& pair : pairs.pairs) {
        clean_ids.push_back(pair.clean.video.video_id());
        clean_scores.push_back(detector.score(pair.clean.video).value);
        adv_ids.push_back(pair.adversarial.adversarial_video.video_id());
        adv_scores.push_back(detector.score(pair.adversarial.adversarial_video).value);
    }
    return make_report(detector.id, std::string(to_string(pairs.attack.kind)), pairs.attack.epsilon, model_id,
                       std::move(clean_ids), std::move(clean_scores), std::move(adv_ids), std::move(adv_scores),
                       threshold.h);
}

ThresholdModel calibrate_detector(const Detector& detector, std::span<const LabeledClip> clips, double theta)
{
    std::vector<double> scores;
    scores.reserve(clips.size());
    for (const auto& clip : clips) scores.push_back(detector.score(clip.video).value);
    return calibrate_threshold(scores, theta, detector.variant);
}

double SweepTable::auc_spread(const std::string& id) const
{
    for (std::size_t d = 0; d < detector_ids.size(); ++d) {
        if (detector_ids[d] != id) continue;
        double lo = 1.0, hi = 0.0;
        for (const auto& r : reports[d]) {
            lo = std::min(lo, r.auc);
            hi = std::max(hi, r.auc);
        }
        return hi - lo;
    }
    throw validation_error("sweep has no detector '" + id + "'");
}

std::string SweepTable::to_csv() const
{
    std::ostringstream out;
    out << "epsilon";
    for (const auto& id : detector_ids) out << ',' << id;
    out << '\n';
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        out << format_double(epsilons[e]);
        for (std::size_t d = 0; d < detector_ids.size(); ++d) out << ',' << format_double(reports[d][e].auc);
        out << '\n';
    }
    return out.str();
}

SweepTable strength_sweep(std::span<const Detector> detectors,
                          AttackKind attack_kind,
                          std::span<const double> epsilons,
                          const std::function<PairedTestSet(double)>& build_pairs,
                          const std::map<std::string, ThresholdModel>& thresholds,
                          const std::string& model_id)
{
    if (epsilons.empty()) throw validation_error("strength sweep needs at least one epsilon");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0) || (i > 0 && !(epsilons[i] > epsilons[i - 1]))) {
            throw validation_error("sweep epsilons must be positive and strictly ascending");
        }
    }
    SweepTable table;
    table.attack_kind = std::string(to_string(attack_kind));
    table.epsilons.assign(epsilons.begin(), epsilons.end());
    table.reports.resize(detectors.size());
    for (const auto& d : detectors) table.detector_ids.push_back(d.id);
    for (double eps : epsilons) {
        const PairedTestSet pairs = build_pairs(eps);
        if (pairs.attack.kind != attack_kind) {
            throw validation_error("sweep pair builder produced a different attack kind");
        }
        for (std::size_t d = 0; d < detectors.size(); ++d) {
            auto it = thresholds.find(detectors[d].id);
            if (it == thresholds.end()) {
                throw validation_error("no threshold for detector '" + detectors[d].id + "'");
            }
            table.reports[d].push_back(evaluate_detector(detectors[d], pairs, it->second, model_id));
        }
    }
    return table;
}

ConfidenceStats mean_and_stddev(std::span<const double> values)
{
    if (values.empty()) throw validation_error("statistics of an empty set are undefined");
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / n), values.size()};
}

ConfidenceStats wrong_confidence_stats(const Recognizer& model, std::span<const AdversarialResult> adversarial)
{
    if (adversarial.empty()) throw validation_error("wrong-class confidence needs at least one adversarial clip");
    std::vector<double> confidences;
    confidences.reserve(adversarial.size());
    for (const auto& r : adversarial) {
        if (!r.success) throw validation_error("wrong-class confidence is defined on successful attacks only");
        confidences.push_back(checked_predict(model, r.adversarial_video).max());
    }
    return mean_and_stddev(confidences);
}

ConfidenceStats wrong_confidence_stats(const Recognizer& model, const PairedTestSet& pairs)
{
    std::vector<AdversarialResult> adv;
    adv.reserve(pairs.pairs.size());
    for (const auto& p : pairs.pairs) adv.push_back(p.adversarial);
    return wrong_confidence_stats(model, adv);
}

std::vector<AggregateRow> aggregate(std::span<const EvaluationReport> reports, GroupBy group_by)
{
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
    for (const auto& r : reports) {
        std::string key;
        switch (group_by) {
        case GroupBy::attack: key = r.attack_kind; break;
        case GroupBy::model: key = r.model_id; break;
        case GroupBy::detector: key = r.detector_id; break;
        case GroupBy::epsilon: key = format_double(r.epsilon); break;
        }
        auto& slot = acc[{key, r.detector_id}];
        slot.first += r.auc;
        ++slot.second;
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, value] : acc) {
        rows.push_back({key.first, key.second, value.first / static_cast<double>(value.second), value.second});
    }
    return rows;
}

std::string grid_table_csv(std::span<const EvaluationReport> reports, const std::vector<std::string>& detector_order)
{
    std::vector<std::string> columns = detector_order;
    std::set<std::string> extra;
    for (const auto& r : reports) {
        if (std::find(columns.begin(), columns.end(), r.detector_id) == columns.end()) extra.insert(r.detector_id);
    }
    columns.insert(columns.end(), extra.begin(), extra.end());

    using RowKey = std::tuple<std::string, double, std::string>;
    std::vector<RowKey> row_order;
    std::map<RowKey, std::map<std::string, double>> cells;
    for (const auto& r : reports) {
        RowKey key{r.attack_kind, r.epsilon, r.model_id};
        if (!cells.contains(key)) row_order.push_back(key);
        cells[key][r.detector_id] = r.auc;
    }
    std::ostringstream out;
    out << "attack,epsilon,model";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (const auto& key : row_order) {
        out << std::get<0>(key) << ',' << format_double(std::get<1>(key)) << ',' << std::get<2>(key);
        const auto& row = cells[key];
        for (const auto& c : columns) {
            out << ',';
            if (auto it = row.find(c); it != row.end()) out << format_double(it->second);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace vlad
