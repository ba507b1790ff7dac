#include "vlad_cli/cli.hpp"

#include "vlad/checkpoint.hpp"
#include "vlad/error.hpp"
#include "vlad/manifest.hpp"
#include "vlad/reference_setup.hpp"
#include "vlad/serialization.hpp"
#include "vlad/video_io.hpp"

#include <CLI11.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <thread>

namespace vlad::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string run_id;
    std::string out = "runs";

    // train
    std::string dataset;
    bool resume = false;
    int until_epoch = 0;
    // calibrate
    std::optional<double> theta;
    // attack / evaluate
    std::string attack;
    std::optional<double> epsilon;
    std::optional<int> steps;
    std::optional<double> step_size;
    bool sweep = false;
    // bench
    std::optional<double> stub_ms;
    std::optional<std::size_t> clips;
    std::optional<std::size_t> warmup;
};

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string shortest(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string timestamp_run_id()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw io_error("failed writing '" + path.string() + "'");
}

// Holds runs/<run-id>/.lock for the lifetime of one command.
class RunDirectory {
public:
    RunDirectory(const fs::path& root) : root_(root)
    {
        std::error_code ec;
        for (const char* sub : {"config", "manifests", "checkpoints", "scores", "reports", "grid", "clips"}) {
            fs::create_directories(root_ / sub, ec);
            if (ec) throw io_error("cannot create '" + (root_ / sub).string() + "': " + ec.message());
        }
        lock_ = root_ / ".lock";
        const int fd = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            throw Error(ErrorCategory::concurrency, "run directory '" + root_.string() + "' is locked by another command (" +
                                                        lock_.string() + ")");
        }
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
        ::close(fd);
    }
    ~RunDirectory()
    {
        std::error_code ec;
        fs::remove(lock_, ec);
    }
    RunDirectory(const RunDirectory&) = delete;
    RunDirectory& operator=(const RunDirectory&) = delete;

    const fs::path& root() const { return root_; }
    fs::path operator/(const fs::path& rel) const { return root_ / rel; }

private:
    fs::path root_;
    fs::path lock_;
};

struct Context {
    std::string command;
    Options opts;
    ExperimentConfig config;
    std::string digest;
    std::unique_ptr<RunDirectory> run;
    std::ostream* out = nullptr;
};

ExperimentConfig resolve_config(const std::string& command, const Options& o)
{
    json file = json::object();
    if (!o.config_path.empty()) {
        try {
            file = read_json_file(o.config_path);
        } catch (const Error& e) {
            throw config_error(e.what());
        }
    }
    ExperimentConfig c = experiment_config_from_json(file);
    if (o.seed) {
        if (command == "datagen") {
            c.eval_data.seed = *o.seed;
            c.train_data.seed = *o.seed + 1;
        } else if (command == "train") {
            c.recognizer.seed = *o.seed;
            c.scorer.seed = *o.seed + 1;
        } else if (command == "attack") {
            c.attack.seed = *o.seed;
        } else {
            c.split_seed = *o.seed;
        }
    }
    if (o.theta) c.theta = *o.theta;
    if (o.epsilon) c.attack.epsilon = *o.epsilon;
    if (o.steps) c.attack.steps = *o.steps;
    if (o.step_size) c.attack.step_size = *o.step_size;
    if (!o.attack.empty()) {
        try {
            c.attack.kind = parse_attack_kind(o.attack);
        } catch (const Error& e) {
            throw config_error(std::string("--attack: ") + e.what());
        }
        c.attacks = {std::string(to_string(c.attack.kind))};
    }
    if (o.clips) c.bench_clips = *o.clips;
    if (o.warmup) c.bench_warmup = *o.warmup;
    c.validate();
    return c;
}

LabelVocabulary read_vocabulary(const fs::path& path)
{
    if (!fs::exists(path)) throw io_error("missing vocabulary file '" + path.string() + "' (run `vlad datagen` first)");
    const json j = read_json_file(path.string());
    return LabelVocabulary(j.at("labels").get<std::vector<std::string>>(), j.at("id").get<std::string>());
}

Dataset load_dataset(const fs::path& manifest, const LabelVocabulary& vocabulary)
{
    if (!fs::exists(manifest)) throw io_error("dataset manifest '" + manifest.string() + "' does not exist");
    Dataset ds{vocabulary, {}};
    for (const auto& rec : read_clip_manifest(manifest)) {
        const auto label = vocabulary.index_of(rec.label);
        if (!label) throw validation_error("clip '" + rec.video_id + "' has label '" + rec.label + "' outside the vocabulary");
        ds.clips.push_back({load_video_tensor(resolve_record_path(manifest, rec.path)), *label});
    }
    return ds;
}

void require_file(const fs::path& path, const std::string& producer)
{
    if (!fs::exists(path)) throw io_error("missing '" + path.string() + "' (run `vlad " + producer + "` first)");
}

// Models, the evaluation pool and its calibration/test split, rebuilt
// deterministically from the run directory.
PreparedExperiment load_prepared(const Context& ctx)
{
    const RunDirectory& run = *ctx.run;
    require_file(run / "checkpoints/recognizer.ckpt", "train");
    require_file(run / "checkpoints/scorer.ckpt", "train");
    PreparedExperiment p;
    p.config = ctx.config;
    p.recognizer = std::make_unique<ConvVideoClassifier>(
        ConvVideoClassifier::from_checkpoint(read_checkpoint(run / "checkpoints/recognizer.ckpt")));
    p.scorer = std::make_unique<DualEncoderScorer>(
        DualEncoderScorer::from_checkpoint(read_checkpoint(run / "checkpoints/scorer.ckpt")));
    const LabelVocabulary vocab = read_vocabulary(run / "manifests/vocabulary.json");
    if (!(p.recognizer->vocabulary() == vocab)) {
        throw model_error("recognizer checkpoint vocabulary differs from the run's dataset vocabulary");
    }
    p.eval_pool = load_dataset(run / "manifests/eval.jsonl", vocab);
    p.recognizer_accuracy = clip_accuracy(*p.recognizer, p.eval_pool);
    p.scorer_accuracy = frame_retrieval_accuracy(*p.scorer, p.eval_pool);
    p.split = split_dataset(filter_correctly_classified(p.eval_pool, *p.recognizer), ctx.config.split_ratio,
                            ctx.config.split_seed);
    return p;
}

std::vector<Detector> selected_detectors(const PreparedExperiment& p, const std::vector<std::string>& ids)
{
    std::vector<Detector> all = standard_detectors(p);
    std::vector<Detector> out;
    for (const auto& id : ids) {
        for (const auto& d : all) {
            if (d.id == id) out.push_back(d);
        }
    }
    return out;
}

std::string attack_tag(AttackKind kind, double epsilon)
{
    return std::string(to_string(kind)) + "_eps" + format_number(epsilon);
}

// ---- commands -------------------------------------------------------------

void cmd_datagen(Context& ctx)
{
    const RunDirectory& run = *ctx.run;
    std::vector<std::string> labels = synthetic_class_labels(ctx.config.eval_data.n_classes);
    const LabelVocabulary vocab(labels, "synthetic-" + std::to_string(labels.size()));
    write_json_file((run / "manifests/vocabulary.json").string(), json{{"id", vocab.id()}, {"labels", vocab.labels()}},
                    ctx.digest);

    const std::pair<const char*, const SyntheticConfig*> parts[] = {{"train", &ctx.config.train_data},
                                                                    {"eval", &ctx.config.eval_data}};
    for (const auto& [name, sc] : parts) {
        const fs::path clip_dir = run / "clips" / name;
        fs::create_directories(clip_dir);
        std::vector<ClipRecord> records;
        // Clips are rendered and written one at a time to keep memory flat.
        for (std::size_t label = 0; label < sc->n_classes; ++label) {
            for (std::size_t i = 0; i < sc->clips_per_class; ++i) {
                const VideoTensor clip = render_synthetic_clip(*sc, label, i);
                const std::string file = clip.video_id() + kTensorExtension;
                save_video_tensor(clip_dir / file, clip);
                records.push_back({clip.video_id(), vocab.label(label), std::string("../clips/") + name + "/" + file,
                                   std::string(name) == "train" ? "train" : "pool"});
            }
        }
        write_clip_manifest(run / "manifests" / (std::string(name) + ".jsonl"), records, ctx.digest);
        *ctx.out << name << ": " << records.size() << " clips, " << sc->n_classes << " classes\n";
    }
}

std::string predictions_csv(const Recognizer& model, const Dataset& ds, const std::string& digest)
{
    std::string text = "# config_digest: " + digest + "\nvideo_id,label,predicted";
    for (std::size_t m = 0; m < ds.vocabulary.size(); ++m) text += ",p" + std::to_string(m);
    text += '\n';
    for (const auto& clip : ds.clips) {
        const auto p = model.predict(clip.video);
        text += clip.video.video_id() + ',' + std::to_string(clip.label) + ',' + std::to_string(p.argmax());
        for (double v : p.values()) {
            text += ',' + shortest(v);
        }
        text += '\n';
    }
    return text;
}

void check_resume_config(const Checkpoint& ckpt, json expected, const std::string& what)
{
    json stored = ckpt.config.contains("model") ? ckpt.config.at("model") : ckpt.config;
    // The epoch target may grow between runs; every other knob must match.
    stored.erase("epochs");
    expected.erase("epochs");
    if (stored != expected) {
        throw config_error("cannot resume " + what + ": checkpoint was trained with a different configuration");
    }
}

void cmd_train(Context& ctx)
{
    const RunDirectory& run = *ctx.run;
    const fs::path manifest = ctx.opts.dataset.empty() ? run / "manifests/train.jsonl" : fs::path(ctx.opts.dataset);
    if (!fs::exists(manifest)) throw io_error("dataset manifest '" + manifest.string() + "' does not exist");
    const fs::path vocab_path = manifest.parent_path() / "vocabulary.json";
    const Dataset train = load_dataset(manifest, read_vocabulary(vocab_path));

    const int target = ctx.opts.until_epoch > 0 ? std::min(ctx.opts.until_epoch, ctx.config.recognizer.epochs)
                                                : ctx.config.recognizer.epochs;
    const int scorer_target = ctx.opts.until_epoch > 0 ? std::min(ctx.opts.until_epoch, ctx.config.scorer.epochs)
                                                       : ctx.config.scorer.epochs;
    const fs::path rec_path = run / "checkpoints/recognizer.ckpt";
    const fs::path sc_path = run / "checkpoints/scorer.ckpt";

    std::optional<ConvVideoClassifier> recognizer;
    std::optional<DualEncoderScorer> scorer;
    if (ctx.opts.resume) {
        require_file(rec_path, "train");
        require_file(sc_path, "train");
        const Checkpoint rc = read_checkpoint(rec_path);
        const Checkpoint sc = read_checkpoint(sc_path);
        check_resume_config(rc, json(ctx.config.recognizer), "recognizer");
        check_resume_config(sc, json(ctx.config.scorer), "scorer");
        recognizer.emplace(ConvVideoClassifier::from_checkpoint(rc));
        scorer.emplace(DualEncoderScorer::from_checkpoint(sc));
    } else {
        recognizer.emplace(ConvVideoClassifier::initialize(train.vocabulary, train.clips.at(0).video.shape(),
                                                           ctx.config.recognizer));
        scorer.emplace(DualEncoderScorer::initialize(train.vocabulary, train.clips.at(0).video.shape().height,
                                                     train.clips.at(0).video.shape().width, ctx.config.scorer));
    }
    recognizer->train(train, target);
    scorer->train(train, scorer_target);
    write_checkpoint(rec_path, recognizer->to_checkpoint());
    write_checkpoint(sc_path, scorer->to_checkpoint());
    write_text(run / "scores/train_predictions.csv", predictions_csv(*recognizer, train, ctx.digest));
    *ctx.out << "recognizer: epoch " << recognizer->epochs_completed() << ", train accuracy "
             << clip_accuracy(*recognizer, train) << "\n"
             << "scorer: epoch " << scorer->epochs_completed() << ", frame retrieval "
             << frame_retrieval_accuracy(*scorer, train) << "\n";
}

void write_split_manifest(const Context& ctx, const DatasetSplit& split)
{
    std::vector<ClipRecord> records;
    const auto add = [&](const std::vector<LabeledClip>& clips, const char* name) {
        for (const auto& c : clips) {
            records.push_back({c.video.video_id(), split.vocabulary.label(c.label),
                               "../clips/eval/" + c.video.video_id() + kTensorExtension, name});
        }
    };
    add(split.calibration, "calibration");
    add(split.test_clean, "test");
    write_clip_manifest(*ctx.run / "manifests/split.jsonl", records, ctx.digest);
}

void cmd_calibrate(Context& ctx)
{
    const PreparedExperiment p = load_prepared(ctx);
    write_split_manifest(ctx, p.split);
    std::vector<ScoreRow> rows;
    for (const auto& d : standard_detectors(p)) {
        std::vector<double> scores;
        for (const auto& clip : p.split.calibration) {
            scores.push_back(d.score(clip.video).value);
            rows.push_back({clip.video.video_id(), d.id, d.variant, scores.back(), false});
        }
        const ThresholdModel t = calibrate_threshold(scores, ctx.config.theta, d.variant);
        json j = t;
        j["detector_id"] = d.id;
        write_json_file((*ctx.run / ("checkpoints/threshold_" + d.id + ".json")).string(), j, ctx.digest);
        *ctx.out << d.id << ": h = " << t.h << " (theta " << t.theta << ", K " << t.count << ")\n";
    }
    write_text(*ctx.run / "scores/calibration.csv", scores_csv(rows, ctx.digest));
}

void cmd_attack(Context& ctx)
{
    const PreparedExperiment p = load_prepared(ctx);
    for (const auto& name : ctx.config.attacks) {
        AttackSpec spec = ctx.config.attack;
        spec.kind = parse_attack_kind(name);
        const std::string tag = attack_tag(spec.kind, spec.epsilon);
        const fs::path clip_dir = *ctx.run / "clips" / ("adv_" + tag);
        fs::create_directories(clip_dir);
        std::vector<AdversarialRecord> records;
        std::size_t successes = 0;
        for (const auto& clip : p.split.test_clean) {
            const AdversarialResult r = run_attack(*p.recognizer, clip.video, clip.label, spec);
            AdversarialRecord rec{clip.video.video_id(), spec.kind, spec.epsilon, spec.steps, spec.effective_step_size(),
                                  spec.seed, r.success, p.split.vocabulary.label(clip.label), r.original_label,
                                  r.predicted_label, r.perturbation_linf, ""};
            if (r.success) {
                const std::string file = clip.video.video_id() + kTensorExtension;
                save_video_tensor(clip_dir / file, r.adversarial_video);
                rec.path = "../clips/adv_" + tag + "/" + file;
                ++successes;
            }
            records.push_back(std::move(rec));
        }
        write_adversarial_manifest(*ctx.run / "manifests" / ("adv_" + tag + ".jsonl"), records, ctx.digest);
        *ctx.out << tag << ": " << successes << "/" << records.size() << " successful\n";
    }
}

PairedTestSet load_paired_set(const Context& ctx, const PreparedExperiment& p, AttackKind kind)
{
    const std::string tag = attack_tag(kind, ctx.config.attack.epsilon);
    const fs::path manifest = *ctx.run / "manifests" / ("adv_" + tag + ".jsonl");
    if (!fs::exists(manifest)) {
        throw protocol_error("no adversarial set '" + manifest.string() + "' (run `vlad attack` first)");
    }
    std::map<std::string, const LabeledClip*> clean;
    for (const auto& c : p.split.test_clean) clean[c.video.video_id()] = &c;

    PairedTestSet set{p.split.vocabulary, ctx.config.attack, {}, 0};
    set.attack.kind = kind;
    for (const auto& rec : read_adversarial_manifest(manifest)) {
        auto it = clean.find(rec.video_id);
        if (it == clean.end()) {
            throw protocol_error("adversarial clip '" + rec.video_id + "' is not in the current test split");
        }
        ++set.attempted;
        if (!rec.success) continue;
        AdversarialResult r{load_video_tensor(resolve_record_path(manifest, rec.path)), rec.original_label,
                            rec.predicted_label, true, rec.perturbation_linf};
        set.pairs.push_back({*it->second, std::move(r)});
    }
    if (set.pairs.empty()) throw protocol_error("adversarial set '" + tag + "' has no successful attacks");
    verify_paired_test_set(set, *p.recognizer);
    return set;
}

ThresholdModel load_threshold(const Context& ctx, const std::string& detector)
{
    const fs::path path = *ctx.run / ("checkpoints/threshold_" + detector + ".json");
    if (!fs::exists(path)) throw protocol_error("no threshold for " + detector + " (run `vlad calibrate` first)");
    return read_json_file(path.string()).get<ThresholdModel>();
}

void write_report(const Context& ctx, const EvaluationReport& r, const std::string& name)
{
    write_json_file((*ctx.run / "reports" / (name + ".json")).string(), json(r), ctx.digest);
}

void cmd_evaluate(Context& ctx)
{
    const PreparedExperiment p = load_prepared(ctx);
    const std::vector<Detector> detectors = selected_detectors(p, ctx.config.detectors);
    std::map<std::string, ThresholdModel> thresholds;
    for (const auto& d : detectors) thresholds[d.id] = load_threshold(ctx, d.id);
    const std::string model_id = "conv_video_classifier";

    if (ctx.opts.sweep) {
        const AttackKind kind = ctx.config.attack.kind;
        auto build = [&](double eps) {
            AttackSpec spec = ctx.config.attack;
            spec.epsilon = eps;
            return build_paired_test_set(p.split, spec, *p.recognizer);
        };
        const SweepTable table =
            strength_sweep(detectors, kind, ctx.config.sweep_epsilons, build, thresholds, model_id);
        for (std::size_t d = 0; d < table.detector_ids.size(); ++d) {
            std::string curve = "# config_digest: " + ctx.digest + "\nepsilon,auc\n";
            for (const auto& r : table.reports[d]) {
                write_report(ctx, r, "sweep_" + attack_tag(kind, r.epsilon) + "_" + r.detector_id);
                curve += format_number(r.epsilon) + "," + shortest(r.auc) + "\n";
            }
            write_text(*ctx.run / "grid" / ("sweep_" + table.detector_ids[d] + ".csv"), curve);
            *ctx.out << table.detector_ids[d] << ": AUC spread " << table.auc_spread(table.detector_ids[d]) << "\n";
        }
        write_text(*ctx.run / "grid/sweep.csv", "# config_digest: " + ctx.digest + "\n" + table.to_csv());
        return;
    }

    std::vector<EvaluationReport> reports;
    for (const auto& name : ctx.config.attacks) {
        const AttackKind kind = parse_attack_kind(name);
        const PairedTestSet set = load_paired_set(ctx, p, kind);
        const std::string tag = attack_tag(kind, set.attack.epsilon);
        std::vector<ScoreRow> rows;
        for (const auto& d : detectors) {
            EvaluationReport r = evaluate_detector(d, set, thresholds.at(d.id), model_id);
            write_report(ctx, r, tag + "_" + d.id);
            auto more = score_rows(r, d.variant);
            rows.insert(rows.end(), more.begin(), more.end());
            *ctx.out << tag << " " << d.id << ": AUC " << r.auc << ", TPR@h " << r.tpr_at_h << ", FPR@h "
                     << r.fpr_at_h << "\n";
            reports.push_back(std::move(r));
        }
        write_text(*ctx.run / "scores" / (tag + ".csv"), scores_csv(rows, ctx.digest));
    }
    write_text(*ctx.run / "grid/grid.csv", "# config_digest: " + ctx.digest + "\n" + grid_table_csv(reports));
}

void cmd_bench(Context& ctx)
{
    json record;
    if (ctx.opts.stub_ms) {
        // Stub pipeline with an injected delay: checks the timing harness
        // independently of any model.
        const auto delay = std::chrono::duration<double, std::milli>(*ctx.opts.stub_ms);
        std::vector<VideoTensor> stream;
        for (int i = 0; i < 4; ++i) {
            stream.push_back(VideoTensor::filled({32, 8, 8, 1}, 0.0f, "stub-" + std::to_string(i)));
        }
        const FpsReport r = measure_fps([&](const VideoTensor&) { std::this_thread::sleep_for(delay); }, stream,
                                        ctx.config.bench_warmup, ctx.config.bench_clips, ctx.digest);
        record["stub"] = r;
        *ctx.out << "stub: " << r.fps << " fps\n";
    } else {
        const PreparedExperiment p = load_prepared(ctx);
        const auto& vocab = p.recognizer->vocabulary();
        const std::size_t n = std::min(p.eval_pool.clips.size(), ctx.config.bench_clips);
        std::vector<VideoTensor> stream;
        std::map<std::string, ClassProbabilities> cached;
        for (std::size_t i = 0; i < n; ++i) {
            stream.push_back(p.eval_pool.clips[i].video);
            cached.emplace(stream.back().video_id(), p.recognizer->predict(stream.back()));
        }
        const fs::path tpath = *ctx.run / "checkpoints/threshold_VLAD-2.json";
        const double h = fs::exists(tpath) ? read_json_file(tpath.string()).get<ThresholdModel>().h : 0.0;
        const auto cf = ctx.config.context_frames;
        const FpsReport detector_only = measure_fps(
            [&](const VideoTensor& v) {
                const auto pc = context_pipeline(v, *p.scorer, vocab, cf);
                decide(detection_score(cached.at(v.video_id()), pc, ScoreVariant::vlad2), h);
            },
            stream, ctx.config.bench_warmup, ctx.config.bench_clips, ctx.digest);
        const FpsReport combined = measure_fps(
            [&](const VideoTensor& v) {
                const auto pa = p.recognizer->predict(v);
                const auto pc = context_pipeline(v, *p.scorer, vocab, cf);
                decide(detection_score(pa, pc, ScoreVariant::vlad2), h);
            },
            stream, ctx.config.bench_warmup, ctx.config.bench_clips, ctx.digest);
        record["detector"] = detector_only;
        record["combined"] = combined;
        *ctx.out << "detector pipeline: " << detector_only.fps << " fps\ncombined pipeline: " << combined.fps
                 << " fps\n";
    }
    write_json_file((*ctx.run / "reports/fps.json").string(), record, ctx.digest);
}

void add_common(CLI::App* sub, Options& o)
{
    sub->add_option("--config", o.config_path, "Experiment config file (JSON)");
    sub->add_option("--seed", o.seed, "Seed override for this command's random component");
    sub->add_option("--run-id", o.run_id, "Run identifier (default: UTC timestamp)");
    sub->add_option("--out", o.out, "Root directory for runs")->capture_default_str();
}

}  // namespace

int exit_code_for(const std::string& category)
{
    static const std::map<std::string, int> codes{{"validation", 2}, {"io", 3},     {"model", 4},
                                                  {"protocol", 5},   {"config", 6}, {"concurrency", 7}};
    auto it = codes.find(category);
    return it == codes.end() ? 1 : it->second;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Detect adversarial video clips by cross-checking a recognizer against a frame-label scorer"};
    app.require_subcommand(1);
    auto* datagen = app.add_subcommand("datagen", "Render the synthetic training and evaluation datasets");
    auto* train = app.add_subcommand("train", "Train the recognizer and the scorer");
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate detector thresholds on clean clips");
    auto* attack = app.add_subcommand("attack", "Build adversarial test sets");
    auto* evaluate = app.add_subcommand("evaluate", "Score clean and adversarial clips and write reports");
    auto* bench = app.add_subcommand("bench", "Measure detection pipeline throughput");
    for (auto* sub : {datagen, train, calibrate, attack, evaluate, bench}) add_common(sub, o);
    train->add_option("--dataset", o.dataset, "Clip manifest to train on (default: the run's train manifest)");
    train->add_flag("--resume", o.resume, "Continue from the run's checkpoints");
    train->add_option("--until-epoch", o.until_epoch, "Stop after this epoch (for staged training)");
    calibrate->add_option("--theta", o.theta, "Percentile in [0,100]");
    for (auto* sub : {attack, evaluate}) {
        sub->add_option("--attack", o.attack, "Attack kind: FGSM-v, PGD-v, OFA or Flick");
        sub->add_option("--epsilon", o.epsilon, "L-infinity budget");
    }
    attack->add_option("--steps", o.steps, "Iterations");
    attack->add_option("--step-size", o.step_size, "Step size (default epsilon/4)");
    evaluate->add_flag("--sweep", o.sweep, "Sweep the attack strength over evaluation.sweep_epsilons");
    bench->add_option("--stub-ms", o.stub_ms, "Time a stub pipeline sleeping this long per clip");
    bench->add_option("--clips", o.clips, "Measured clips");
    bench->add_option("--warmup", o.warmup, "Warmup clips");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: config: " << e.what() << "\n";
        return exit_code_for("config");
    }

    Context ctx;
    ctx.opts = o;
    ctx.out = &out;
    for (auto* sub : app.get_subcommands()) ctx.command = sub->get_name();
    try {
        ctx.config = resolve_config(ctx.command, o);
        ctx.digest = config_digest(ctx.config);
        const std::string run_id = o.run_id.empty() ? timestamp_run_id() : o.run_id;
        ctx.run = std::make_unique<RunDirectory>(fs::path(o.out) / run_id);
        json resolved = experiment_config_to_json(ctx.config);
        resolved["command"] = ctx.command;
        resolved["run_id"] = run_id;
        write_json_file((*ctx.run / ("config/" + ctx.command + ".json")).string(), resolved, ctx.digest);

        if (ctx.command == "datagen") cmd_datagen(ctx);
        else if (ctx.command == "train") cmd_train(ctx);
        else if (ctx.command == "calibrate") cmd_calibrate(ctx);
        else if (ctx.command == "attack") cmd_attack(ctx);
        else if (ctx.command == "evaluate") cmd_evaluate(ctx);
        else if (ctx.command == "bench") cmd_bench(ctx);
        out << "run: " << ctx.run->root().string() << "\n";
    } catch (const Error& e) {
        const std::string category(to_string(e.category()));
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: " << category << ": " << msg << "\n";
        return exit_code_for(category);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: internal: " << msg << "\n";
        return 1;
    }
    return 0;
}

}  // namespace vlad::cli
