#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hairnet/adam.hpp"
#include "hairnet/orientation.hpp"
#include "hairnet/tensor.hpp"

namespace hairnet {

/// Resolution and width knobs of the network. Channel widths of the reference architecture
/// are divided by channel_divisor; the feature width is set directly.
struct ScaleProfile {
    int input_res = 256;
    int scalp_res = 32;
    int samples = 100;  // M
    int channel_divisor = 1;
    int feature_dim = 512;

    static ScaleProfile full();
    static ScaleProfile desk();
    /// 32 px input, 4x4 scalp, 4 samples, channels / 8. Used for gradient checks and overfit runs.
    static ScaleProfile tiny();
    static ScaleProfile named(const std::string& name);

    void validate() const;
    int strands() const { return scalp_res * scalp_res; }
    int encoder_final_res() const { return input_res / 32; }
    /// The decoder starts at 4x4; scalp_res = 4 * 2^upsamples.
    int decoder_upsamples() const;
    int width(int reference) const { return reference / channel_divisor; }

    bool operator==(const ScaleProfile&) const = default;
};

struct LayerSpec {
    enum class Kind { Conv, Linear };
    enum class Init { He, Xavier };
    std::string name;
    Kind kind;
    int in, out, kernel, stride, padding;
    Init init;
};

/// The full layer table for a profile, in parameter order.
std::vector<LayerSpec> layer_specs(const ScaleProfile& profile);

/// Named weights: "<layer>.weight" and "<layer>.bias" for each LayerSpec, in order.
template <typename T>
struct HairNetParams {
    ScaleProfile profile;
    std::vector<std::string> names;
    std::vector<nn::Tensor<T>> tensors;

    const nn::Tensor<T>& get(const std::string& name) const;
    nn::Tensor<T>& get(const std::string& name);
    std::size_t parameter_count() const;

    template <typename U>
    HairNetParams<U> cast() const {
        HairNetParams<U> out;
        out.profile = profile;
        out.names = names;
        for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
        return out;
    }
};

/// He scaling for ReLU layers, Xavier for layers next to a tanh or the linear outputs.
template <typename T>
HairNetParams<T> init_params(const ScaleProfile& profile, std::uint64_t seed);

/// Parameters registered on a tape, index-aligned with HairNetParams::tensors.
template <typename T>
struct BoundParams {
    ScaleProfile profile;
    std::vector<nn::Var<T>> vars;
};

template <typename T>
BoundParams<T> bind(nn::Tape<T>& tape, const HairNetParams<T>& params);

template <typename T>
struct StrandOutputs {
    nn::Var<T> positions;   // 3M x R x R, channel 3j+a = axis a of sample j
    nn::Var<T> curvatures;  // M x R x R
};

template <typename T>
struct HairNetOutputs {
    nn::Var<T> z;         // feature_dim x 1 x 1, in (-1, 1)
    nn::Var<T> features;  // feature_dim x R x R
    nn::Var<T> positions;
    nn::Var<T> curvatures;
};

template <typename T>
nn::Var<T> encode(const BoundParams<T>& p, const nn::Var<T>& image);

template <typename T>
nn::Var<T> decode_features(const BoundParams<T>& p, const nn::Var<T>& z);

/// Per-cell strand decoders; `features` may be any C x H x W grid (H x W cells).
template <typename T>
StrandOutputs<T> decode_strands(const BoundParams<T>& p, const nn::Var<T>& features);

template <typename T>
HairNetOutputs<T> forward(const BoundParams<T>& p, const nn::Var<T>& image);

/// Network input tensor for an orientation image; checks the resolution against the profile.
template <typename T>
nn::Tensor<T> image_tensor(const OrientationImage& image, const ScaleProfile& profile);

/// Grad-free evaluation result.
struct Prediction {
    nn::Tensor<float> z;
    nn::Tensor<float> features;
    nn::Tensor<float> positions;
    nn::Tensor<float> curvatures;
};

Prediction predict(const HairNetParams<float>& params, const OrientationImage& image);
Prediction decode_latent(const HairNetParams<float>& params, const nn::Tensor<float>& z);

// ---- checkpoints ----------------------------------------------------------------------------

struct Checkpoint {
    HairNetParams<float> params;
    std::optional<nn::AdamState<float>> adam;
    std::int64_t epoch = 0;
    std::int64_t step = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string& label = {});
/// As load_checkpoint, but the stored profile must equal `expected`.
Checkpoint load_checkpoint_for_resume(const std::filesystem::path& path, const ScaleProfile& expected);

}  // namespace hairnet
