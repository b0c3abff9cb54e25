// hairnet: command-line front end for corpus generation, training, inference and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hairnet/corpus.hpp"
#include "hairnet/datagen.hpp"
#include "hairnet/errors.hpp"
#include "hairnet/eval.hpp"
#include "hairnet/model.hpp"
#include "hairnet/orientation.hpp"
#include "hairnet/parallel.hpp"
#include "hairnet/reconstruct.hpp"
#include "hairnet/selftest.hpp"
#include "hairnet/train.hpp"

namespace fs = std::filesystem;
using namespace hairnet;

namespace {

/// Bad input from the user (as opposed to a failure inside the pipeline).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 1;
    bool seed_given = false;
    int threads = 1;
};

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

Pose parse_pose(const std::string& text) {
    if (text.empty()) return {};
    const auto v = parse_numbers(text);
    if (v.size() != 3 && v.size() != 6) throw UsageError("--pose takes yaw,pitch,roll[,tx,ty,tz]");
    const Vec3 t = v.size() == 6 ? Vec3{v[3], v[4], v[5]} : Vec3{};
    return Pose::from_euler_degrees(v[0], v[1], v[2], t);
}

OrientationImage load_input(const fs::path& input, const std::string& mask, int resolution) {
    if (input.extension() == ".ornt") return load_orientation(input);
    if (mask.empty()) throw UsageError("a grey image input needs --mask with hair/body labels");
    const GrayImage gray = load_pgm(input);
    const GrayImage labels = load_pgm(mask);
    if (gray.width != labels.width || gray.height != labels.height) throw UsageError("image and mask differ in size");
    std::vector<std::uint8_t> bytes(labels.data.size());
    for (std::size_t k = 0; k < bytes.size(); ++k) bytes[k] = static_cast<std::uint8_t>(labels.data[k] * 255.0f + 0.5f);
    if (gray.width != resolution || gray.height != resolution) {
        throw UsageError("input is " + std::to_string(gray.width) + "x" + std::to_string(gray.height) +
                         ", the checkpoint expects " + std::to_string(resolution));
    }
    return orientation_from_photo(gray, bytes, GaborParams::for_resolution(resolution));
}

int cmd_gen_data(const Globals& g, const fs::path& config, const fs::path& out) {
    auto cfg = KeyValueConfig::load(config);
    cfg.apply_env_overrides(DatasetConfig::keys());
    auto dc = DatasetConfig::from_config(cfg);
    if (g.seed_given) dc.seed = g.seed;
    const auto s = build_dataset(dc, out);
    std::cout << "models " << s.models << ", pairs " << s.pairs << ", empty views " << s.empty_views
              << ", collision warnings " << s.collision_warnings << '\n';
    return 0;
}

int cmd_train(const Globals& g, const fs::path& config, const std::string& corpus, const fs::path& out, bool resume) {
    auto cfg = KeyValueConfig::load(config);
    cfg.apply_env_overrides(TrainConfig::keys());
    if (!corpus.empty()) cfg.set("corpus", corpus);
    if (g.seed_given) cfg.set("seed", std::to_string(g.seed));
    const auto tc = TrainConfig::from_config(cfg);
    const auto result = train_from_corpus(tc, out, resume);
    if (!result.history.empty()) std::cout << format_step(result.history.back()) << '\n';
    std::cout << "checkpoint " << (out / "checkpoint.hnet").string() << '\n';
    return 0;
}

int cmd_infer(const Globals& g, const fs::path& checkpoint, const fs::path& input, const std::string& mask,
              const fs::path& out, int strands, bool no_refine, const std::string& pose_text) {
    const auto ckpt = load_checkpoint(checkpoint);
    const auto& prof = ckpt.params.profile;
    const Pose pose = parse_pose(pose_text);
    if (strands != 0 && strands < prof.strands()) {
        throw UsageError("--strands must be at least the network's " + std::to_string(prof.strands()));
    }
    const auto image = load_input(input, mask, prof.input_res);
    const auto pred = predict(ckpt.params, image);
    HairModel model;
    if (strands > prof.strands()) {
        UpsampleOptions opts;
        opts.target_strands = strands;
        opts.seed = g.seed;
        opts.pose = pose;
        model = upsample(ckpt.params, pred.features, opts);
    } else {
        model = prediction_model(pred, prof, pose);
    }
    if (!no_refine) model = refine(model);
    save_hair(model, out);
    std::cout << model.strand_count() << " strands written to " << out.string() << '\n';
    return 0;
}

int cmd_interp(const fs::path& checkpoint, const fs::path& a, const fs::path& b, double t, const fs::path& out,
               bool refine_output) {
    const auto ckpt = load_checkpoint(checkpoint);
    const auto za = predict(ckpt.params, load_orientation(a)).z;
    const auto zb = predict(ckpt.params, load_orientation(b)).z;
    auto model = latent_interpolate(ckpt.params, za, zb, t);
    if (refine_output) model = refine(model);
    save_hair(model, out);
    return 0;
}

/// test_fraction and seed of the run that produced `checkpoint`, when recorded.
void read_split(const fs::path& checkpoint, double& test_fraction, std::uint64_t& seed) {
    const auto path = checkpoint.parent_path() / "train_config.txt";
    if (!fs::exists(path)) return;
    const auto cfg = KeyValueConfig::load(path);
    test_fraction = cfg.get_double("test_fraction", test_fraction);
    seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(seed)));
}

int cmd_eval(const Globals& g, const fs::path& checkpoint, const fs::path& corpus, const std::string& variants_text,
             std::string run_text, double test_fraction, bool report_only) {
    const fs::path run = run_text.empty() ? checkpoint.parent_path().parent_path() : fs::path(run_text);
    if (!report_only) {
        if (checkpoint.empty() || corpus.empty()) throw UsageError("eval needs --checkpoint and --corpus");
        double fraction = 0.05;
        std::uint64_t seed = g.seed;
        read_split(checkpoint, fraction, seed);
        if (test_fraction >= 0.0) fraction = test_fraction;
        if (g.seed_given) seed = g.seed;
        const auto index = load_corpus_index(corpus);
        const auto split = split_by_model(index, fraction, seed);
        if (split.test.empty()) throw UsageError("the held-out split is empty; raise --test-fraction");

        std::stringstream ss(variants_text);
        std::string variant;
        while (std::getline(ss, variant, ',')) {
            bool known = false;
            for (const auto& [key, label] : report_variants()) known = known || key == variant;
            if (!known) throw UsageError("unknown variant: " + variant);
            EvalMetrics m;
            if (variant == "nn") {
                const auto db = NnDatabase::build(index, split.train);
                m = evaluate(nn_predictor(db), index, split.test);
            } else {
                const fs::path path = variant == "full" ? checkpoint : run / variant / "checkpoint.hnet";
                if (!fs::exists(path)) {
                    std::cerr << "warning: no checkpoint for variant " << variant << " at " << path.string() << '\n';
                    continue;
                }
                const auto ckpt = load_checkpoint(path);
                m = evaluate(network_predictor(ckpt.params), index, split.test);
            }
            save_metrics(m, run / variant / "metrics.txt");
        }
    }
    std::cout << format_report_text(report(run));
    return 0;
}

int cmd_export(const fs::path& hair, const std::string& format, const fs::path& out) {
    if (format != "obj") throw UsageError("unsupported export format: " + format);
    write_obj(load_hair(hair), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-view strand hair reconstruction"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->envname("HAIRNET_SEED");
    app.add_option("--threads", g.threads, "Worker threads")->envname("HAIRNET_THREADS")->check(CLI::PositiveNumber);

    fs::path config, out, corpus_dir, checkpoint, input, hair, a, b;
    std::string corpus, mask, variants = "full,nn", format = "obj", pose, run;
    int strands = 9000;
    bool no_refine = false, resume = false, refine_output = false, report_only = false;
    double t = 0.5, test_fraction = -1.0;

    auto* gen = app.add_subcommand("gen-data", "Build a synthetic corpus");
    gen->add_option("--config", config, "key = value dataset config")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", out, "Corpus directory")->required();

    auto* train_cmd = app.add_subcommand("train", "Train a network on a corpus");
    train_cmd->add_option("--config", config, "key = value training config")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--corpus", corpus, "Corpus directory (overrides the config)")->check(CLI::ExistingDirectory);
    train_cmd->add_option("--out", out, "Run directory")->required();
    train_cmd->add_flag("--resume", resume, "Continue from <out>/checkpoint.hnet");

    auto* infer = app.add_subcommand("infer", "Reconstruct a hair model from one orientation image");
    infer->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    infer->add_option("--input", input, ".ornt file, or a grey PGM together with --mask")->required()->check(CLI::ExistingFile);
    infer->add_option("--mask", mask, "PGM labels: 255 hair, 128 body, 0 background")->check(CLI::ExistingFile);
    infer->add_option("--out", out, "Output .hair")->required();
    infer->add_option("--strands", strands, "Strand count after upsampling; 0 keeps the network grid")->check(CLI::NonNegativeNumber);
    infer->add_flag("--no-refine", no_refine, "Skip smoothing and curliness re-synthesis");
    infer->add_option("--pose", pose, "yaw,pitch,roll[,tx,ty,tz] of the head in the input view");

    auto* interp = app.add_subcommand("interp", "Interpolate two hairstyles in latent space");
    interp->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    interp->add_option("--a", a)->required()->check(CLI::ExistingFile);
    interp->add_option("--b", b)->required()->check(CLI::ExistingFile);
    interp->add_option("--t", t)->check(CLI::Range(0.0, 1.0));
    interp->add_option("--out", out)->required();
    interp->add_flag("--refine", refine_output, "Smooth and re-synthesise curls on the result");

    auto* eval = app.add_subcommand("eval", "Held-out metrics and the comparison report");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint of the full model; ablations are looked up next to it")
        ->check(CLI::ExistingFile);
    eval->add_option("--corpus", corpus_dir)->check(CLI::ExistingDirectory);
    eval->add_option("--variants", variants, "Comma list of full, no_vaw, no_col, no_curv, nn");
    eval->add_option("--run", run, "Run directory holding one sub-directory per variant");
    eval->add_option("--test-fraction", test_fraction, "Held-out fraction (default: as trained)");
    eval->add_flag("--report-only", report_only, "Only rebuild report.txt / report.tsv from stored metrics");

    auto* exp = app.add_subcommand("export", "Convert a .hair file");
    exp->add_option("--hair", hair)->required()->check(CLI::ExistingFile);
    exp->add_option("--format", format, "obj");
    exp->add_option("--out", out)->required();

    auto* selftest = app.add_subcommand("selftest", "Gradient checks and loss oracles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    g.seed_given = app.get_option("--seed")->count() > 0 || std::getenv("HAIRNET_SEED") != nullptr;
    set_thread_count(g.threads);

    try {
        if (*gen) return cmd_gen_data(g, config, out);
        if (*train_cmd) return cmd_train(g, config, corpus, out, resume);
        if (*infer) return cmd_infer(g, checkpoint, input, mask, out, strands, no_refine, pose);
        if (*interp) return cmd_interp(checkpoint, a, b, t, out, refine_output);
        if (*eval) {
            if (run.empty() && checkpoint.empty()) throw UsageError("eval needs --checkpoint or --run");
            return cmd_eval(g, checkpoint, corpus_dir, variants, run, test_fraction, report_only);
        }
        if (*exp) return cmd_export(hair, format, out);
        if (*selftest) return run_selftest(std::cout) ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
