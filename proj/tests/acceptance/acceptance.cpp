// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures, so ctest fails when any criterion does.

#include "statistic_oracles.hpp"
#include "test_support.hpp"

#include "vlad/attacks.hpp"
#include "vlad/detector.hpp"
#include "vlad/evaluation.hpp"
#include "vlad/fps.hpp"
#include "vlad/reference_setup.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

using namespace vlad;
using namespace vlad::testing;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void verdict(const char* id, bool ok, double seconds, double limit, const std::string& detail)
{
    const bool in_time = seconds <= limit;
    const bool pass = ok && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s %s  %s  [%.1fs, limit %.0fs%s]\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds, limit,
                in_time ? "" : ", over time");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

// AC1 -----------------------------------------------------------------------

void ac1_statistics()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    const std::size_t sizes[] = {2, 10, 400};
    double worst = 0.0;
    bool symmetric = true, nonnegative = true, identity = true;
    for (int pair = 0; pair < 1000; ++pair) {
        const std::size_t m = sizes[pair % 3];
        const auto pa = random_simplex(m, rng);
        const auto pc = random_simplex(m, rng);
        const ClassProbabilities a(pa), c(pc);
        for (ScoreVariant v : kStatVariants) {
            const double got = detection_score(a, c, v).value;
            worst = std::max(worst, std::fabs(got - static_cast<double>(oracle_score(pa, pc, v))));
            nonnegative &= got >= 0.0;
            // Identity: a distribution scores zero against itself (VLAD-2 against its own one-hot).
            const double self = v == ScoreVariant::vlad2 ? detection_score(a, one_hot(a), v).value : detection_score(a, a, v).value;
            identity &= std::fabs(self) <= 1e-12;
        }
        symmetric &= symmetric_kl(a, c) == symmetric_kl(c, a);
        symmetric &= detection_score(a, c, ScoreVariant::vlad1).value == detection_score(c, a, ScoreVariant::vlad1).value;
    }
    verdict("AC1", worst <= 1e-9 && symmetric && nonnegative && identity, seconds_since(t0), 10,
            fmt("max |impl - oracle| = %.3g (tol 1e-9), symmetric=%d nonnegative=%d identity=%d", worst, symmetric,
                nonnegative, identity));
}

// AC2 -----------------------------------------------------------------------

void ac2_calibration()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2002);
    std::gamma_distribution<double> dist(2.0, 0.5);
    std::vector<double> calib(1000);
    for (double& s : calib) s = dist(rng);
    const ThresholdModel t = calibrate_threshold(calib, 90.0);
    std::size_t flagged = 0;
    for (int i = 0; i < 1000; ++i) flagged += decide(DetectionScore{dist(rng), ScoreVariant::vlad1}, t.h).adversarial ? 1 : 0;
    const double fpr = static_cast<double>(flagged) / 1000.0;

    std::vector<double> ten(10);
    for (int i = 0; i < 10; ++i) ten[i] = i + 1;
    const double h10 = calibrate_threshold(ten, 90.0).h;
    verdict("AC2", fpr >= 0.07 && fpr <= 0.13 && h10 == 9.0, seconds_since(t0), 10,
            fmt("fresh-sample FPR = %.3f (want [0.07, 0.13]), K=10 h = %g (want 9)", fpr, h10));
}

// AC3 -----------------------------------------------------------------------

void ac3_auc()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(3003);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t nc = 1 + rng() % 200, na = 1 + rng() % 200;
        std::normal_distribution<double> clean_d(0.0, 1.0), adv_d(0.7, 1.0);
        const bool ties = trial % 2 == 0;
        std::vector<double> clean(nc), adv(na);
        for (double& x : clean) x = ties ? std::round(clean_d(rng) * 3.0) : clean_d(rng);
        for (double& x : adv) x = ties ? std::round(adv_d(rng) * 3.0) : adv_d(rng);
        const double swept = roc_area(roc_curve(clean, adv));
        long double wins = 0.0L;
        for (double a : adv) {
            for (double c : clean) wins += a > c ? 1.0L : (a == c ? 0.5L : 0.0L);
        }
        const double pairwise = static_cast<double>(wins / (static_cast<long double>(nc) * na));
        worst = std::max({worst, std::fabs(swept - pairwise), std::fabs(mann_whitney_auc(clean, adv) - pairwise)});
    }
    const std::vector<double> clean{0.1, 0.4}, adv{0.3, 0.5};
    const double example = roc_auc(clean, adv).auc;
    const double example_swept = roc_area(roc_curve(clean, adv));
    verdict("AC3", worst <= 1e-12 && example == 0.75 && example_swept == 0.75, seconds_since(t0), 10,
            fmt("max |sweep - pairwise| = %.3g (tol 1e-12), worked example = %.17g / %.17g (want 0.75)", worst, example,
                example_swept));
}

// AC8 -----------------------------------------------------------------------

void ac8_bench()
{
    const auto t0 = Clock::now();
    std::vector<VideoTensor> stream;
    for (int i = 0; i < 4; ++i) stream.push_back(VideoTensor::filled({32, 8, 8, 1}, 0.0f, "stub-" + std::to_string(i)));
    const double delay_ms = 10.0;
    const auto r = measure_fps(
        [&](const VideoTensor&) { std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms)); },
        stream, 2, 30);
    const double expected = 32.0 / (delay_ms / 1000.0);
    const double rel = std::fabs(r.fps - expected) / expected;
    verdict("AC8", rel <= 0.10, seconds_since(t0), 60,
            fmt("stub FPS %.1f vs injected-delay %.1f, rel err %.3f (tol 0.10)", r.fps, expected, rel));
}

// AC4 -----------------------------------------------------------------------

bool frames_differ(const VideoTensor& a, const VideoTensor& b, std::size_t n)
{
    const auto fa = a.frame(n), fb = b.frame(n);
    return !std::equal(fa.begin(), fa.end(), fb.begin());
}

void ac4_attacks(const PreparedExperiment& p)
{
    const auto t0 = Clock::now();
    const auto& model = *p.recognizer;
    const double eps = 0.03;
    const std::size_t n_clips = std::min<std::size_t>(50, p.split.test_clean.size());
    std::size_t violations = 0, checked = 0;
    std::string first_problem;
    auto problem = [&](const std::string& what) {
        if (violations++ == 0) first_problem = what;
    };
    for (AttackKind kind : {AttackKind::fgsm_v, AttackKind::pgd_v, AttackKind::one_frame, AttackKind::flick}) {
        for (std::size_t i = 0; i < n_clips; ++i) {
            const auto& clip = p.split.test_clean[i];
            const AttackSpec spec{kind, eps};
            const auto r = run_attack(model, clip.video, clip.label, spec);
            const auto& x = clip.video;
            const auto& y = r.adversarial_video;
            ++checked;
            const auto xd = x.data(), yd = y.data();
            for (std::size_t k = 0; k < xd.size(); ++k) {
                if (std::fabs(static_cast<double>(yd[k]) - xd[k]) > eps || yd[k] < 0.0f || yd[k] > 1.0f) {
                    problem(std::string(to_string(kind)) + " budget/clamp on " + x.video_id());
                    break;
                }
            }
            const auto s = x.shape();
            if (kind == AttackKind::one_frame) {
                std::size_t changed = 0;
                for (std::size_t n = 0; n < s.frames; ++n) changed += frames_differ(x, y, n) ? 1 : 0;
                if (changed != 1) problem(fmt("OFA changed %zu frames on %s", changed, x.video_id().c_str()));
            }
            if (kind == AttackKind::flick) {
                bool constant = true;
                for (std::size_t n = 0; n < s.frames && constant; ++n) {
                    for (std::size_t ch = 0; ch < s.channels && constant; ++ch) {
                        const double d0 = static_cast<double>(y.at(n, 0, 0, ch)) - x.at(n, 0, 0, ch);
                        for (std::size_t yy = 0; yy < s.height && constant; ++yy) {
                            for (std::size_t xx = 0; xx < s.width; ++xx) {
                                if (static_cast<double>(y.at(n, yy, xx, ch)) - x.at(n, yy, xx, ch) != d0) {
                                    constant = false;
                                    break;
                                }
                            }
                        }
                    }
                }
                if (!constant) problem("Flick not spatially constant on " + x.video_id());
            }
            if (kind == AttackKind::fgsm_v) {
                const auto one_step = run_attack(model, x, clip.label, AttackSpec{AttackKind::pgd_v, eps, 1, eps});
                if (!(one_step.adversarial_video == y)) problem("PGD(1 step, step=eps) != FGSM on " + x.video_id());
            }
        }
    }
    verdict("AC4", violations == 0, seconds_since(t0), 300,
            fmt("%zu attacked clips (%zu per attack, eps %.2f), %zu invariant violations%s%s", checked, n_clips, eps,
                violations, violations ? ": " : "", first_problem.c_str()));
}

// AC5 / AC7 / AC6 ------------------------------------------------------------

struct Reference {
    PreparedExperiment prepared;
    std::vector<Detector> detectors;  // VLAD-1, VLAD-2
    std::map<std::string, ThresholdModel> thresholds;
};

void ac5_end_to_end(const Reference& ref, Clock::time_point t0, ConfidenceStats* pgd_conf)
{
    const auto& p = ref.prepared;
    AttackSpec pgd{AttackKind::pgd_v, 0.1};
    const auto pairs = build_paired_test_set(p.split, pgd, *p.recognizer);
    *pgd_conf = wrong_confidence_stats(*p.recognizer, pairs);
    double auc1 = 0.0, auc2 = 0.0;
    for (const auto& d : ref.detectors) {
        const auto r = evaluate_detector(d, pairs, ref.thresholds.at(d.id), "conv_video_classifier");
        (d.id == "VLAD-1" ? auc1 : auc2) = r.auc;
    }
    const double flips = pairs.success_rate();
    const bool ok = p.recognizer_accuracy >= 0.90 && p.scorer_accuracy >= 0.80 && flips >= 0.90 && auc2 >= 0.85 &&
                    auc1 >= 0.75 && auc1 - 0.5 >= 0.25 && auc2 - 0.5 >= 0.25;
    verdict("AC5", ok, seconds_since(t0), 900,
            fmt("recognizer acc %.3f (>=0.90), scorer acc %.3f (>=0.80), PGD-v eps 0.1 flips %.3f (>=0.90), "
                "VLAD-2 AUC %.3f (>=0.85), VLAD-1 AUC %.3f (>=0.75), margins over 0.5: %.3f / %.3f (>=0.25)",
                p.recognizer_accuracy, p.scorer_accuracy, flips, auc2, auc1, auc2 - 0.5, auc1 - 0.5));
}

void ac7_confidence(const Reference& ref, const ConfidenceStats& pgd, double ac5_seconds)
{
    const auto t0 = Clock::now();
    const auto& p = ref.prepared;
    const auto fgsm_pairs = build_paired_test_set(p.split, AttackSpec{AttackKind::fgsm_v, 0.1}, *p.recognizer);
    const auto fgsm = wrong_confidence_stats(*p.recognizer, fgsm_pairs);
    verdict("AC7", pgd.mean >= fgsm.mean, ac5_seconds + seconds_since(t0), 900,
            fmt("eps 0.1 wrong-class confidence: PGD-v %.3f +- %.3f (n=%zu) vs FGSM-v %.3f +- %.3f (n=%zu)", pgd.mean,
                pgd.stddev, pgd.count, fgsm.mean, fgsm.stddev, fgsm.count));
}

void ac6_sweep(const Reference& ref)
{
    const auto t0 = Clock::now();
    const auto& p = ref.prepared;
    const std::vector<double> eps{0.01, 0.03, 0.1, 0.3};
    std::vector<Detector> vlad2;
    for (const auto& d : ref.detectors) {
        if (d.id == "VLAD-2") vlad2.push_back(d);
    }
    std::string curve;
    bool ok = false;
    try {
        const auto table = strength_sweep(
            vlad2, AttackKind::pgd_v, eps,
            [&](double e) { return build_paired_test_set(p.split, AttackSpec{AttackKind::pgd_v, e}, *p.recognizer); },
            ref.thresholds, "conv_video_classifier");
        const double spread = table.auc_spread("VLAD-2");
        for (const auto& r : table.reports[0]) {
            curve += fmt(" %g:%.3f(n=%zu)", r.epsilon, r.auc, r.adv_scores.size());
        }
        ok = spread <= 0.15;
        curve = fmt("VLAD-2 AUC spread %.3f (<=0.15); eps:auc", spread) + curve;
    } catch (const std::exception& e) {
        curve = std::string("sweep failed: ") + e.what();
    }
    verdict("AC6", ok, seconds_since(t0), 1800, curve);
}

// AC9 -----------------------------------------------------------------------

void ac9_gradients(const PreparedExperiment& p)
{
    const auto t0 = Clock::now();
    const auto& model = *p.recognizer;
    const std::size_t m = model.vocabulary().size();
    std::mt19937_64 rng(9009);
    std::normal_distribution<double> nd(0.0, 1.0);
    double worst = 0.0;
    const double h = 1e-4;
    for (int probe = 0; probe < 20; ++probe) {
        const auto& clip = p.split.test_clean[rng() % p.split.test_clean.size()];
        const std::vector<double> x(clip.video.data().begin(), clip.video.data().end());
        // Loss toward a rotating label keeps the derivative well away from zero.
        const std::size_t label = (clip.label + static_cast<std::size_t>(probe)) % m;
        std::vector<double> d(x.size());
        double norm = 0.0;
        for (double& v : d) norm += (v = nd(rng)) * v;
        norm = std::sqrt(norm);
        for (double& v : d) v /= norm;
        const auto g = model.input_gradient(x, label);
        double analytic = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) analytic += g[i] * d[i];
        std::vector<double> plus(x), minus(x);
        for (std::size_t i = 0; i < x.size(); ++i) {
            plus[i] += h * d[i];
            minus[i] -= h * d[i];
        }
        const double numeric = (model.loss(plus, label) - model.loss(minus, label)) / (2.0 * h);
        const double rel = std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-300});
        worst = std::max(worst, rel);
    }
    verdict("AC9", worst <= 1e-3, seconds_since(t0), 120,
            fmt("20 probes, max relative error %.3g (tol 1e-3)", worst));
}

}  // namespace

int main()
{
    ac1_statistics();
    ac2_calibration();
    ac3_auc();
    ac8_bench();

    const auto t5 = Clock::now();
    Reference ref;
    try {
        ref.prepared = prepare_experiment(reference_config());
        for (ScoreVariant v : {ScoreVariant::vlad1, ScoreVariant::vlad2}) {
            const auto& p = ref.prepared;
            ref.detectors.push_back(make_vlad_detector(*p.recognizer, *p.scorer, p.split.vocabulary, p.config.context_frames, v));
            ref.thresholds[ref.detectors.back().id] = calibrate_detector(ref.detectors.back(), p.split.calibration, p.config.theta);
        }
    } catch (const std::exception& e) {
        for (const char* id : {"AC4", "AC5", "AC6", "AC7", "AC9"}) {
            verdict(id, false, seconds_since(t5), 900, std::string("reference setup failed: ") + e.what());
        }
        return failures;
    }
    ConfidenceStats pgd_conf;
    try {
        ac5_end_to_end(ref, t5, &pgd_conf);
        ac7_confidence(ref, pgd_conf, seconds_since(t5));
    } catch (const std::exception& e) {
        verdict("AC5", false, seconds_since(t5), 900, e.what());
        verdict("AC7", false, seconds_since(t5), 900, e.what());
    }
    ac6_sweep(ref);
    ac4_attacks(ref.prepared);
    ac9_gradients(ref.prepared);
    std::printf("%d acceptance criteria failed\n", failures);
    return failures;
}
