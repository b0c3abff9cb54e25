#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hairnet/adam.hpp"
#include "hairnet/config.hpp"
#include "hairnet/corpus.hpp"
#include "hairnet/eval.hpp"
#include "hairnet/losses.hpp"
#include "hairnet/model.hpp"

namespace hairnet {

struct TrainConfig {
    int epochs = 500;
    int batch_size = 32;
    double lr = 1e-4;
    double lr_factor = 2.0;  // applied from lr_boundary on
    int lr_boundary = -1;    // epoch; -1 means epochs / 2
    LossOptions loss;
    std::uint64_t seed = 1;
    std::string profile = "full";
    std::string corpus;
    double test_fraction = 0.05;
    std::int64_t max_steps = 0;  // 0 = run all epochs

    static TrainConfig from_config(const KeyValueConfig& cfg);
    static const std::set<std::string>& keys();
    /// key = value text that from_config reads back to the same configuration.
    std::string to_text() const;

    ScaleProfile scale_profile() const { return ScaleProfile::named(profile); }
    int boundary() const { return lr_boundary >= 0 ? lr_boundary : epochs / 2; }
    double lr_at_epoch(std::int64_t epoch) const { return epoch >= boundary() ? lr * lr_factor : lr; }
};

/// A corpus pair turned into network tensors and loss targets.
struct TrainingSample {
    nn::Tensor<float> image;
    LossTargets<float> targets;
};

TrainingSample make_training_sample(const CorpusSample& sample, const ScaleProfile& profile, bool uniform_weights);

struct StepRecord {
    std::int64_t step = 0;
    std::int64_t epoch = 0;
    LossComponents loss;
    double lr = 0.0;
};

/// "step, epoch, L_pos, L_curv, L_col, L_total, lr".
std::string format_step(const StepRecord& r);

struct TrainOutput {
    std::filesystem::path dir;  // empty: keep everything in memory
    bool resume = false;        // continue from dir/checkpoint.hnet
    std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<StepRecord> history;  // steps run in this call
};

/// Mini-batch Adam over `samples`. Gradients of a batch are summed in batch order and averaged,
/// so results only depend on the seed. A non-finite loss or gradient throws DivergenceError;
/// the checkpoint on disk is then the last completed epoch.
TrainResult train(const TrainConfig& config, const std::vector<TrainingSample>& samples, const TrainOutput& output = {});

/// Loads the corpus named in the config, trains on its training split and writes
/// checkpoint.hnet, metrics.log and train_config.txt into `out`.
TrainResult train_from_corpus(const TrainConfig& config, const std::filesystem::path& out, bool resume = false);

/// Held-out metrics of a checkpoint.
EvalMetrics evaluate_epoch(const Checkpoint& checkpoint, const CorpusIndex& index, std::span<const std::size_t> entries);

}  // namespace hairnet
