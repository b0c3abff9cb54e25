#include "hairnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "hairnet/errors.hpp"
#include "hairnet/parallel.hpp"
#include "hairnet/random.hpp"

namespace hairnet {

const std::set<std::string>& TrainConfig::keys() {
    static const std::set<std::string> k = {
        "epochs",  "batch_size", "lr",         "lr_factor",     "lr_boundary",         "lambda_curv",
        "lambda_col", "no_vaw",  "no_collision", "no_curvature", "euclidean_collision", "seed",
        "profile", "corpus",     "test_fraction", "max_steps"};
    return k;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) {
    cfg.require_known(keys());
    TrainConfig c;
    c.epochs = static_cast<int>(cfg.get_int("epochs", c.epochs));
    c.batch_size = static_cast<int>(cfg.get_int("batch_size", c.batch_size));
    c.lr = cfg.get_double("lr", c.lr);
    c.lr_factor = cfg.get_double("lr_factor", c.lr_factor);
    c.lr_boundary = static_cast<int>(cfg.get_int("lr_boundary", c.lr_boundary));
    c.loss.lambda_curv = cfg.get_double("lambda_curv", c.loss.lambda_curv);
    c.loss.lambda_col = cfg.get_double("lambda_col", c.loss.lambda_col);
    c.loss.no_vaw = cfg.get_bool("no_vaw", c.loss.no_vaw);
    c.loss.no_collision = cfg.get_bool("no_collision", c.loss.no_collision);
    c.loss.no_curvature = cfg.get_bool("no_curvature", c.loss.no_curvature);
    c.loss.euclidean_collision = cfg.get_bool("euclidean_collision", c.loss.euclidean_collision);
    c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
    c.profile = cfg.get_string("profile", c.profile);
    c.corpus = cfg.get_string("corpus", c.corpus);
    c.test_fraction = cfg.get_double("test_fraction", c.test_fraction);
    c.max_steps = cfg.get_int("max_steps", c.max_steps);

    if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(c.lr > 0.0)) throw ConfigError("lr must be positive");
    if (c.loss.lambda_curv < 0.0 || c.loss.lambda_col < 0.0) throw ConfigError("loss weights must be >= 0");
    if (c.test_fraction < 0.0 || c.test_fraction >= 1.0) throw ConfigError("test_fraction must be in [0, 1)");
    if (c.max_steps < 0) throw ConfigError("max_steps must be >= 0");
    (void)c.scale_profile();
    return c;
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto flag = [](bool b) { return b ? "true" : "false"; };
    os << "epochs = " << epochs << '\n'
       << "batch_size = " << batch_size << '\n'
       << "lr = " << num(lr) << '\n'
       << "lr_factor = " << num(lr_factor) << '\n'
       << "lr_boundary = " << lr_boundary << '\n'
       << "lambda_curv = " << num(loss.lambda_curv) << '\n'
       << "lambda_col = " << num(loss.lambda_col) << '\n'
       << "no_vaw = " << flag(loss.no_vaw) << '\n'
       << "no_collision = " << flag(loss.no_collision) << '\n'
       << "no_curvature = " << flag(loss.no_curvature) << '\n'
       << "euclidean_collision = " << flag(loss.euclidean_collision) << '\n'
       << "seed = " << seed << '\n'
       << "profile = " << profile << '\n';
    if (!corpus.empty()) os << "corpus = " << corpus << '\n';
    os << "test_fraction = " << num(test_fraction) << '\n' << "max_steps = " << max_steps << '\n';
    return os.str();
}

TrainingSample make_training_sample(const CorpusSample& sample, const ScaleProfile& profile, bool uniform_weights) {
    const int r = profile.scalp_res;
    if (sample.hair.strand_count() != profile.strands() || sample.hair.samples_per_strand() != profile.samples) {
        throw ShapeError("corpus model has " + std::to_string(sample.hair.strand_count()) + " strands of " +
                         std::to_string(sample.hair.samples_per_strand()) + " samples; profile expects " +
                         std::to_string(profile.strands()) + " of " + std::to_string(profile.samples));
    }
    TrainingSample t;
    t.image = image_tensor<float>(sample.image, profile);
    t.targets.positions = positions_tensor<float>(sample.hair, r, r);
    t.targets.curvatures = curvatures_tensor<float>(sample.hair, r, r);
    t.targets.weights = VisibilityWeights::tensor<float>(sample.visible, profile.samples, r, r, uniform_weights);
    for (const auto& root : sample.hair.grid.roots) t.targets.collision.roots.emplace_back(root);
    t.targets.collision.pose = sample.pose;
    return t;
}

std::string format_step(const StepRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%lld, %lld, %.9e, %.9e, %.9e, %.9e, %.9e", static_cast<long long>(r.step),
                  static_cast<long long>(r.epoch), r.loss.pos, r.loss.curv, r.loss.col, r.loss.total, r.lr);
    return buf;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::int64_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, 0xe90c0000ull + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

void save_checkpoint_files(const Checkpoint& ckpt, const std::filesystem::path& dir) {
    save_checkpoint(ckpt, dir / "checkpoint.hnet");
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<TrainingSample>& samples, const TrainOutput& output) {
    if (samples.empty()) throw std::invalid_argument("training set is empty");
    const ScaleProfile profile = config.scale_profile();
    const bool to_disk = !output.dir.empty();

    Checkpoint ckpt;
    if (output.resume) {
        ckpt = load_checkpoint_for_resume(output.dir / "checkpoint.hnet", profile);
    } else {
        ckpt.params = init_params<float>(profile, derive_seed(config.seed, 0x1a17ull));
    }
    std::vector<nn::Tensor<float>*> params;
    for (auto& t : ckpt.params.tensors) params.push_back(&t);
    if (!ckpt.adam) {
        ckpt.adam.emplace();
        ckpt.adam->init_like(params);
    }

    std::ofstream log;
    if (to_disk) {
        std::filesystem::create_directories(output.dir);
        log.open(output.dir / "metrics.log", output.resume ? std::ios::app : std::ios::trunc);
        if (!log) throw FormatError(FormatError::Kind::Io, "cannot write " + (output.dir / "metrics.log").string());
        if (!output.resume) log << "# step, epoch, L_pos, L_curv, L_col, L_total, lr\n";
    }

    // The VAW ablation trains against uniform weights whatever the samples carry.
    std::optional<nn::Tensor<float>> uniform;
    if (config.loss.no_vaw) uniform = nn::Tensor<float>(samples.front().targets.weights.shape, 1.0f);

    const std::size_t n = samples.size();
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n);
    const std::int64_t steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
    std::int64_t total = steps_per_epoch * config.epochs;
    if (config.max_steps > 0) total = std::min(total, config.max_steps);

    TrainResult result;
    std::vector<std::vector<float>> grads(params.size());
    std::int64_t order_epoch = -1;
    std::vector<std::size_t> order;
    std::int64_t step = ckpt.step;

    while (step < total) {
        const std::int64_t epoch = step / steps_per_epoch;
        const std::size_t pos = static_cast<std::size_t>(step % steps_per_epoch);
        if (epoch != order_epoch) {
            order = epoch_order(n, config.seed, epoch);
            order_epoch = epoch;
        }
        const std::size_t begin = pos * batch, end = std::min(n, begin + batch);
        for (std::size_t p = 0; p < params.size(); ++p) grads[p].assign(params[p]->size(), 0.0f);

        LossComponents sum;
        for (std::size_t b = begin; b < end; ++b) {
            const auto& s = samples[order[b]];
            LossTargets<float> targets_copy;
            const LossTargets<float>* targets = &s.targets;
            if (uniform) {
                targets_copy = s.targets;
                targets_copy.weights = *uniform;
                targets = &targets_copy;
            }
            nn::Tape<float> tape;
            const auto bound = bind(tape, ckpt.params);
            const auto out = forward(bound, tape.constant(s.image));
            const auto loss = loss_total(out.positions, out.curvatures, *targets, config.loss);
            if (!std::isfinite(loss.values.total) || !std::isfinite(static_cast<double>(loss.total.item()))) {
                throw DivergenceError("divergence: non-finite loss at step " + std::to_string(step));
            }
            tape.backward(loss.total);
            for (std::size_t p = 0; p < params.size(); ++p) {
                const auto g = tape.grad(bound.vars[p].id());
                if (g.empty()) continue;
                for (std::size_t k = 0; k < g.size(); ++k) grads[p][k] += g[k];
            }
            sum.pos += loss.values.pos;
            sum.curv += loss.values.curv;
            sum.col += loss.values.col;
        }
        const double count = static_cast<double>(end - begin);
        const float inv = static_cast<float>(1.0 / count);
        std::vector<std::span<const float>> spans;
        for (auto& g : grads) {
            for (auto& v : g) v *= inv;
            spans.emplace_back(g);
        }
        const double lr = config.lr_at_epoch(epoch);
        nn::adam_step<float>(params, spans, lr, *ckpt.adam);
        ++step;

        StepRecord rec;
        rec.step = step;
        rec.epoch = epoch;
        rec.loss = {sum.pos / count, sum.curv / count, sum.col / count, 0.0};
        rec.loss.total = combine(rec.loss, config.loss);
        rec.lr = lr;
        result.history.push_back(rec);
        if (to_disk) log << format_step(rec) << '\n';
        if (output.on_step) output.on_step(rec);

        ckpt.step = step;
        ckpt.epoch = step / steps_per_epoch;
        if (to_disk && (step % steps_per_epoch == 0 || step == total)) {
            log.flush();
            save_checkpoint_files(ckpt, output.dir);
        }
    }
    result.checkpoint = std::move(ckpt);
    return result;
}

TrainResult train_from_corpus(const TrainConfig& config, const std::filesystem::path& out, bool resume) {
    if (config.corpus.empty()) throw ConfigError("no corpus given");
    const auto index = load_corpus_index(config.corpus);
    const ScaleProfile profile = config.scale_profile();
    if (index.input_res != profile.input_res || index.scalp_res != profile.scalp_res || index.samples != profile.samples) {
        throw ConfigError("corpus resolution (" + std::to_string(index.input_res) + " px, " +
                          std::to_string(index.scalp_res) + " scalp, " + std::to_string(index.samples) +
                          " samples) does not match profile " + config.profile);
    }
    const auto split = split_by_model(index, config.test_fraction, config.seed);
    if (split.train.empty()) throw std::invalid_argument("training split is empty");
    std::vector<TrainingSample> samples(split.train.size());
    parallel_for(samples.size(), [&](std::size_t k) {
        samples[k] = make_training_sample(load_sample(index, index.entries[split.train[k]]), profile, config.loss.no_vaw);
    });

    std::filesystem::create_directories(out);
    if (!resume) {
        std::ofstream(out / "train_config.txt", std::ios::trunc) << config.to_text();
    }
    TrainOutput output;
    output.dir = out;
    output.resume = resume;
    return train(config, samples, output);
}

EvalMetrics evaluate_epoch(const Checkpoint& checkpoint, const CorpusIndex& index, std::span<const std::size_t> entries) {
    return evaluate(network_predictor(checkpoint.params), index, entries);
}

}  // namespace hairnet
