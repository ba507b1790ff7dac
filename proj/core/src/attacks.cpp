#include "vlad/attacks.hpp"

#include "vlad/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace vlad {

namespace {

constexpr double kFlickGrid = 16777216.0;  // 2^24

float sign_of(double g) noexcept { return g > 0.0 ? 1.0f : (g < 0.0 ? -1.0f : 0.0f); }

void check_preconditions(const Recognizer& model, const VideoTensor& video, std::size_t label, double epsilon)
{
    if (!model.has_gradient()) {
        throw model_error("white-box attack needs a recognizer with gradient access");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw validation_error("attack epsilon must be positive and finite");
    }
    if (label >= model.vocabulary().size()) {
        throw validation_error("attack label index out of range");
    }
    const auto predicted = checked_predict(model, video).argmax();
    if (predicted != label) {
        throw validation_error("clip '" + video.video_id() + "' is not correctly classified (predicted " +
                               std::to_string(predicted) + ", label " + std::to_string(label) +
                               "); attacks run on correctly classified clips only");
    }
}

std::vector<double> gradient_of(const Recognizer& model, const VideoTensor& video, std::size_t label)
{
    auto grad = model.loss_gradient(video, label);
    if (grad.size() != video.data().size()) {
        throw model_error("recognizer gradient has " + std::to_string(grad.size()) + " entries, video has " +
                          std::to_string(video.data().size()));
    }
    return grad;
}

AdversarialResult finish(const Recognizer& model, const VideoTensor& original, std::size_t label, VideoTensor adv)
{
    AdversarialResult r{std::move(adv), label, 0, false, 0.0};
    r.predicted_label = checked_predict(model, r.adversarial_video).argmax();
    r.success = r.predicted_label != label;
    r.perturbation_linf = linf_distance(original, r.adversarial_video);
    return r;
}

// Projected sign-gradient ascent restricted to elements [begin, end). The
// feasible set for each element is [max(0, x0-eps), min(1, x0+eps)].
AdversarialResult projected_sign_ascent(const Recognizer& model,
                                        const VideoTensor& video,
                                        std::size_t label,
                                        double epsilon,
                                        int steps,
                                        double step_size,
                                        std::size_t begin,
                                        std::size_t end)
{
    const auto x0 = video.data();
    const auto alpha = static_cast<float>(step_size);
    std::vector<float> lo(end - begin);
    std::vector<float> hi(end - begin);
    // Bounds are rounded inward to float so |x - x0| <= epsilon holds exactly.
    for (std::size_t i = begin; i < end; ++i) {
        const double l = std::max(0.0, static_cast<double>(x0[i]) - epsilon);
        const double h = std::min(1.0, static_cast<double>(x0[i]) + epsilon);
        float lf = static_cast<float>(l);
        float hf = static_cast<float>(h);
        if (static_cast<double>(lf) < l) lf = std::nextafter(lf, 1.0f);
        if (static_cast<double>(hf) > h) hf = std::nextafter(hf, 0.0f);
        lo[i - begin] = lf;
        hi[i - begin] = hf;
    }
    VideoTensor current = video;
    for (int t = 0; t < steps; ++t) {
        const auto grad = gradient_of(model, current, label);
        std::vector<float> next(current.data().begin(), current.data().end());
        for (std::size_t i = begin; i < end; ++i) {
            next[i] = std::clamp(next[i] + alpha * sign_of(grad[i]), lo[i - begin], hi[i - begin]);
        }
        current = current.with_data(std::move(next));
    }
    return finish(model, video, label, std::move(current));
}

}  // namespace

std::string_view to_string(AttackKind kind) noexcept
{
    switch (kind) {
    case AttackKind::fgsm_v: return "FGSM-v";
    case AttackKind::pgd_v: return "PGD-v";
    case AttackKind::one_frame: return "OFA";
    case AttackKind::flick: return "Flick";
    }
    return "unknown";
}

AttackKind parse_attack_kind(std::string_view name)
{
    std::string key;
    for (char c : name) {
        if (c != '-' && c != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (key == "fgsmv" || key == "fgsm") return AttackKind::fgsm_v;
    if (key == "pgdv" || key == "pgd") return AttackKind::pgd_v;
    if (key == "ofa" || key == "oneframe") return AttackKind::one_frame;
    if (key == "flick" || key == "flickering") return AttackKind::flick;
    throw validation_error("unknown attack kind '" + std::string(name) + "'");
}

void AttackSpec::validate() const
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw validation_error("attack epsilon must be positive, got " + std::to_string(epsilon));
    }
    if (steps < 1) {
        throw validation_error("attack steps must be at least 1, got " + std::to_string(steps));
    }
    if (step_size < 0.0 || !std::isfinite(step_size)) {
        throw validation_error("attack step_size must be positive (or 0 for epsilon/4)");
    }
}

AdversarialResult fgsm_video(const Recognizer& model, const VideoTensor& video, std::size_t label, double epsilon)
{
    check_preconditions(model, video, label, epsilon);
    return projected_sign_ascent(model, video, label, epsilon, 1, epsilon, 0, video.data().size());
}

AdversarialResult pgd_video(const Recognizer& model,
                            const VideoTensor& video,
                            std::size_t label,
                            double epsilon,
                            int steps,
                            double step_size)
{
    check_preconditions(model, video, label, epsilon);
    if (steps < 0) throw validation_error("attack steps must be non-negative");
    const double alpha = step_size > 0.0 ? step_size : epsilon / 4.0;
    return projected_sign_ascent(model, video, label, epsilon, steps, alpha, 0, video.data().size());
}

std::size_t select_frame_by_gradient_mass(std::span<const double> gradient, const VideoShape& shape)
{
    if (gradient.size() != shape.size()) {
        throw validation_error("gradient size does not match video shape " + to_string(shape));
    }
    const std::size_t fs = shape.frame_size();
    std::size_t best = 0;
    double best_mass = -1.0;
    for (std::size_t n = 0; n < shape.frames; ++n) {
        double mass = 0.0;
        for (std::size_t i = n * fs; i < (n + 1) * fs; ++i) mass += std::abs(gradient[i]);
        if (mass > best_mass) {
            best_mass = mass;
            best = n;
        }
    }
    return best;
}

AdversarialResult one_frame_attack(const Recognizer& model,
                                   const VideoTensor& video,
                                   std::size_t label,
                                   double epsilon,
                                   int steps,
                                   double step_size)
{
    check_preconditions(model, video, label, epsilon);
    if (steps < 0) throw validation_error("attack steps must be non-negative");
    const double alpha = step_size > 0.0 ? step_size : epsilon / 4.0;
    const auto frame = select_frame_by_gradient_mass(gradient_of(model, video, label), video.shape());
    const std::size_t fs = video.shape().frame_size();
    return projected_sign_ascent(model, video, label, epsilon, steps, alpha, frame * fs, (frame + 1) * fs);
}

AdversarialResult flickering_attack(const Recognizer& model,
                                    const VideoTensor& video,
                                    std::size_t label,
                                    double epsilon,
                                    int steps,
                                    double step_size)
{
    check_preconditions(model, video, label, epsilon);
    const auto& s = video.shape();
    if (s.channels != 3) {
        throw validation_error("flickering attack needs RGB input, clip '" + video.video_id() + "' has " +
                               std::to_string(s.channels) + " channel(s)");
    }
    if (steps < 0) throw validation_error("attack steps must be non-negative");
    const double alpha = step_size > 0.0 ? step_size : epsilon / 4.0;
    const std::size_t pixels = s.height * s.width;
    const auto x0 = video.data();

    // Feasible offset per (frame, channel): keeps every pixel in [0,1] and |delta| <= eps.
    std::vector<double> lower(s.frames * 3);
    std::vector<double> upper(s.frames * 3);
    for (std::size_t n = 0; n < s.frames; ++n) {
        for (std::size_t c = 0; c < 3; ++c) {
            float mn = 1.0f;
            float mx = 0.0f;
            for (std::size_t p = 0; p < pixels; ++p) {
                const float v = x0[(n * pixels + p) * 3 + c];
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            lower[n * 3 + c] = std::max(-epsilon, -static_cast<double>(mn));
            upper[n * 3 + c] = std::min(epsilon, 1.0 - static_cast<double>(mx));
        }
    }

    std::vector<double> delta(s.frames * 3, 0.0);
    auto apply = [&](const std::vector<double>& d) {
        std::vector<float> out(x0.begin(), x0.end());
        for (std::size_t n = 0; n < s.frames; ++n) {
            for (std::size_t p = 0; p < pixels; ++p) {
                float* px = out.data() + (n * pixels + p) * 3;
                for (std::size_t c = 0; c < 3; ++c) px[c] += static_cast<float>(d[n * 3 + c]);
            }
        }
        return video.with_data(std::move(out));
    };

    VideoTensor current = video;
    for (int t = 0; t < steps; ++t) {
        const auto grad = gradient_of(model, current, label);
        for (std::size_t n = 0; n < s.frames; ++n) {
            for (std::size_t c = 0; c < 3; ++c) {
                double g = 0.0;
                for (std::size_t p = 0; p < pixels; ++p) g += grad[(n * pixels + p) * 3 + c];
                double d = delta[n * 3 + c] + alpha * sign_of(g);
                d = std::clamp(d, lower[n * 3 + c], upper[n * 3 + c]);
                // Truncate toward zero onto the 2^-24 grid; stays inside the bounds.
                d = std::trunc(d * kFlickGrid) / kFlickGrid;
                delta[n * 3 + c] = d;
            }
        }
        current = apply(delta);
    }
    return finish(model, video, label, std::move(current));
}

AdversarialResult run_attack(const Recognizer& model, const VideoTensor& video, std::size_t label, const AttackSpec& spec)
{
    spec.validate();
    switch (spec.kind) {
    case AttackKind::fgsm_v: return fgsm_video(model, video, label, spec.epsilon);
    case AttackKind::pgd_v: return pgd_video(model, video, label, spec.epsilon, spec.steps, spec.effective_step_size());
    case AttackKind::one_frame:
        return one_frame_attack(model, video, label, spec.epsilon, spec.steps, spec.effective_step_size());
    case AttackKind::flick:
        return flickering_attack(model, video, label, spec.epsilon, spec.steps, spec.effective_step_size());
    }
    throw validation_error("unknown attack kind");
}

double linf_distance(const VideoTensor& a, const VideoTensor& b)
{
    if (a.shape() != b.shape()) {
        throw validation_error("linf_distance: shapes differ");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    }
    return worst;
}

}  // namespace vlad
