#include "hairnet/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "hairnet/errors.hpp"

namespace hairnet {

using nn::Shape;
using nn::Tensor;
using nn::Var;

ScaleProfile ScaleProfile::full() { return {256, 32, 100, 1, 512}; }
ScaleProfile ScaleProfile::desk() { return {64, 8, 16, 4, 128}; }
ScaleProfile ScaleProfile::tiny() { return {32, 4, 4, 8, 64}; }

ScaleProfile ScaleProfile::named(const std::string& name) {
    if (name == "full") return full();
    if (name == "desk") return desk();
    if (name == "tiny") return tiny();
    throw ConfigError("unknown profile: " + name + " (expected full, desk or tiny)");
}

int ScaleProfile::decoder_upsamples() const {
    int ups = 0;
    for (int r = 4; r < scalp_res; r *= 2) ++ups;
    return ups;
}

void ScaleProfile::validate() const {
    if (input_res < 32 || input_res % 32 != 0) throw ConfigError("input_res must be a positive multiple of 32");
    if (scalp_res != 4 && scalp_res != 8 && scalp_res != 16 && scalp_res != 32) {
        throw ConfigError("scalp_res must be one of 4, 8, 16, 32");
    }
    if (samples < 2) throw ConfigError("samples must be >= 2");
    if (channel_divisor < 1 || 32 % channel_divisor != 0) throw ConfigError("channel_divisor must divide 32");
    if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
}

std::vector<LayerSpec> layer_specs(const ScaleProfile& p) {
    p.validate();
    using K = LayerSpec::Kind;
    using I = LayerSpec::Init;
    const int f = p.feature_dim;
    const int m = p.samples;
    auto w = [&](int ref) { return p.width(ref); };
    return {
        {"enc.conv1", K::Conv, 3, w(32), 8, 2, 3, I::He},
        {"enc.conv2", K::Conv, w(32), w(64), 8, 2, 3, I::He},
        {"enc.conv3", K::Conv, w(64), w(128), 6, 2, 2, I::He},
        {"enc.conv4", K::Conv, w(128), w(256), 4, 2, 1, I::He},
        {"enc.conv5", K::Conv, w(256), w(256), 3, 1, 1, I::He},
        {"enc.conv6", K::Conv, w(256), w(512), 4, 2, 1, I::He},
        {"enc.conv7", K::Conv, w(512), f, 3, 1, 1, I::He},
        {"dec.fc1", K::Linear, f, w(1024), 1, 1, 0, I::He},
        {"dec.fc2", K::Linear, w(1024), w(4096), 1, 1, 0, I::He},
        {"dec.conv1", K::Conv, w(256), w(512), 3, 1, 1, I::He},
        {"dec.conv2", K::Conv, w(512), w(512), 3, 1, 1, I::He},
        {"dec.conv3", K::Conv, w(512), f, 3, 1, 1, I::He},
        {"pos.conv1", K::Conv, f, w(512), 1, 1, 0, I::He},
        {"pos.conv2", K::Conv, w(512), w(512), 1, 1, 0, I::Xavier},
        {"pos.conv3", K::Conv, w(512), 3 * m, 1, 1, 0, I::Xavier},
        {"curv.conv1", K::Conv, f, w(512), 1, 1, 0, I::He},
        {"curv.conv2", K::Conv, w(512), w(512), 1, 1, 0, I::Xavier},
        {"curv.conv3", K::Conv, w(512), m, 1, 1, 0, I::Xavier},
    };
}

namespace {

enum Layer {
    kEnc1, kEnc2, kEnc3, kEnc4, kEnc5, kEnc6, kEnc7,
    kFc1, kFc2, kDec1, kDec2, kDec3,
    kPos1, kPos2, kPos3, kCurv1, kCurv2, kCurv3,
};

template <typename T>
const Var<T>& weight(const BoundParams<T>& p, Layer l) { return p.vars[2 * l]; }
template <typename T>
const Var<T>& bias(const BoundParams<T>& p, Layer l) { return p.vars[2 * l + 1]; }

template <typename T>
Var<T> conv(const BoundParams<T>& p, Layer l, const Var<T>& x, int stride, int pad) {
    return nn::conv2d(x, weight(p, l), bias(p, l), stride, pad);
}

Shape weight_shape(const LayerSpec& s) {
    if (s.kind == LayerSpec::Kind::Linear) return {s.out, s.in};
    return {s.out, s.in, s.kernel, s.kernel};
}

}  // namespace

template <typename T>
const Tensor<T>& HairNetParams<T>::get(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return tensors[i];
    }
    throw std::out_of_range("no parameter named " + name);
}

template <typename T>
Tensor<T>& HairNetParams<T>::get(const std::string& name) {
    return const_cast<Tensor<T>&>(std::as_const(*this).get(name));
}

template <typename T>
std::size_t HairNetParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
}

template <typename T>
HairNetParams<T> init_params(const ScaleProfile& profile, std::uint64_t seed) {
    HairNetParams<T> params;
    params.profile = profile;
    std::mt19937_64 rng(seed);
    for (const auto& spec : layer_specs(profile)) {
        const double k2 = static_cast<double>(spec.kernel) * spec.kernel;
        const double fan_in = spec.in * k2, fan_out = spec.out * k2;
        const double stddev = spec.init == LayerSpec::Init::He ? std::sqrt(2.0 / fan_in)
                                                               : std::sqrt(2.0 / (fan_in + fan_out));
        std::normal_distribution<double> dist(0.0, stddev);
        Tensor<T> w(weight_shape(spec));
        for (auto& v : w.data) v = static_cast<T>(dist(rng));
        params.names.push_back(spec.name + ".weight");
        params.tensors.push_back(std::move(w));
        params.names.push_back(spec.name + ".bias");
        params.tensors.emplace_back(Shape{spec.out});
    }
    return params;
}

template <typename T>
BoundParams<T> bind(nn::Tape<T>& tape, const HairNetParams<T>& params) {
    BoundParams<T> b;
    b.profile = params.profile;
    for (const auto& t : params.tensors) b.vars.push_back(tape.parameter(t));
    return b;
}

template <typename T>
Var<T> encode(const BoundParams<T>& p, const Var<T>& image) {
    const auto& s = image.shape();
    if (s.size() != 3 || s[0] != 3 || s[1] != p.profile.input_res || s[2] != p.profile.input_res) {
        throw ShapeError("encoder input " + nn::shape_string(s) + " does not match profile resolution " +
                         std::to_string(p.profile.input_res));
    }
    auto x = nn::relu(conv(p, kEnc1, image, 2, 3));
    x = nn::relu(conv(p, kEnc2, x, 2, 3));
    x = nn::relu(conv(p, kEnc3, x, 2, 2));
    x = nn::relu(conv(p, kEnc4, x, 2, 1));
    x = nn::relu(conv(p, kEnc5, x, 1, 1));
    x = nn::relu(conv(p, kEnc6, x, 2, 1));
    x = nn::relu(conv(p, kEnc7, x, 1, 1));
    return nn::tanh(nn::max_pool2d(x, p.profile.encoder_final_res()));
}

template <typename T>
Var<T> decode_features(const BoundParams<T>& p, const Var<T>& z) {
    const int f = p.profile.feature_dim;
    if (z.value().size() != static_cast<std::size_t>(f)) {
        throw ShapeError("latent length " + std::to_string(z.value().size()) + " != feature_dim " + std::to_string(f));
    }
    auto x = nn::reshape(z, {f});
    x = nn::relu(nn::linear(x, weight(p, kFc1), bias(p, kFc1)));
    x = nn::relu(nn::linear(x, weight(p, kFc2), bias(p, kFc2)));
    x = nn::reshape(x, {p.profile.width(256), 4, 4});
    const int ups = p.profile.decoder_upsamples();
    const Layer convs[3] = {kDec1, kDec2, kDec3};
    for (int i = 0; i < 3; ++i) {
        if (i >= 3 - ups) x = nn::upsample_bilinear2x(x);
        x = nn::relu(conv(p, convs[i], x, 1, 1));
    }
    return x;
}

template <typename T>
StrandOutputs<T> decode_strands(const BoundParams<T>& p, const Var<T>& features) {
    if (features.shape().size() != 3 || features.shape()[0] != p.profile.feature_dim) {
        throw ShapeError("strand decoder input " + nn::shape_string(features.shape()) + " needs " +
                         std::to_string(p.profile.feature_dim) + " channels");
    }
    auto pos = nn::relu(conv(p, kPos1, features, 1, 0));
    pos = nn::tanh(conv(p, kPos2, pos, 1, 0));
    pos = conv(p, kPos3, pos, 1, 0);
    auto curv = nn::relu(conv(p, kCurv1, features, 1, 0));
    curv = nn::tanh(conv(p, kCurv2, curv, 1, 0));
    curv = conv(p, kCurv3, curv, 1, 0);
    return {pos, curv};
}

template <typename T>
HairNetOutputs<T> forward(const BoundParams<T>& p, const Var<T>& image) {
    HairNetOutputs<T> out;
    out.z = encode(p, image);
    out.features = decode_features(p, out.z);
    auto strands = decode_strands(p, out.features);
    out.positions = strands.positions;
    out.curvatures = strands.curvatures;
    return out;
}

template <typename T>
Tensor<T> image_tensor(const OrientationImage& image, const ScaleProfile& profile) {
    if (image.height != profile.input_res || image.width != profile.input_res) {
        throw ShapeError("orientation image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         ", profile expects " + std::to_string(profile.input_res));
    }
    Tensor<T> t({3, image.height, image.width});
    for (std::size_t k = 0; k < t.size(); ++k) t.data[k] = static_cast<T>(image.data[k]);
    return t;
}

Prediction predict(const HairNetParams<float>& params, const OrientationImage& image) {
    nn::Tape<float> tape;
    const auto bound = bind(tape, params);
    const auto out = forward(bound, tape.constant(image_tensor<float>(image, params.profile)));
    return {out.z.value(), out.features.value(), out.positions.value(), out.curvatures.value()};
}

Prediction decode_latent(const HairNetParams<float>& params, const Tensor<float>& z) {
    nn::Tape<float> tape;
    const auto bound = bind(tape, params);
    const auto zv = tape.constant(z);
    const auto features = decode_features(bound, zv);
    const auto strands = decode_strands(bound, features);
    return {z, features.value(), strands.positions.value(), strands.curvatures.value()};
}

#define HAIRNET_MODEL_INSTANTIATE(T)                                                  \
    template struct HairNetParams<T>;                                                 \
    template HairNetParams<T> init_params<T>(const ScaleProfile&, std::uint64_t);     \
    template BoundParams<T> bind(nn::Tape<T>&, const HairNetParams<T>&);              \
    template Var<T> encode(const BoundParams<T>&, const Var<T>&);                     \
    template Var<T> decode_features(const BoundParams<T>&, const Var<T>&);            \
    template StrandOutputs<T> decode_strands(const BoundParams<T>&, const Var<T>&);   \
    template HairNetOutputs<T> forward(const BoundParams<T>&, const Var<T>&);         \
    template Tensor<T> image_tensor<T>(const OrientationImage&, const ScaleProfile&);

HAIRNET_MODEL_INSTANTIATE(float)
HAIRNET_MODEL_INSTANTIATE(double)

}  // namespace hairnet
