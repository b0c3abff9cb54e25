#include <benchmark/benchmark.h>

#include <random>

#include "hairnet/datagen.hpp"
#include "hairnet/model.hpp"
#include "hairnet/orientation.hpp"
#include "hairnet/reconstruct.hpp"

using namespace hairnet;

namespace {

nn::Tensor<float> random_tensor(nn::Shape shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    nn::Tensor<float> t(std::move(shape));
    for (auto& v : t.data) v = u(rng);
    return t;
}

OrientationImage random_image(int res) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    OrientationImage img(res, res);
    for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
            img.at(0, y, x) = u(rng);
            img.at(1, y, x) = u(rng);
            img.at(2, y, x) = OrientationImage::kHair;
        }
    }
    return img;
}

const ScaleProfile& profile_arg(int i) {
    static const ScaleProfile profiles[] = {ScaleProfile::tiny(), ScaleProfile::desk(), ScaleProfile::full()};
    return profiles[i];
}

}  // namespace

// First encoder layer of the full profile: 3 -> 32 channels, 8x8 kernel, stride 2 on 256 px.
static void BM_Conv2dFirstLayer(benchmark::State& state) {
    const auto x = random_tensor({3, 256, 256}, 1);
    const auto w = random_tensor({32, 3, 8, 8}, 2);
    const auto b = random_tensor({32}, 3);
    for (auto _ : state) {
        nn::Tape<float> tape;
        auto y = nn::conv2d(tape.constant(x), tape.constant(w), tape.constant(b), 2, 3);
        benchmark::DoNotOptimize(y.value().data.data());
    }
}
BENCHMARK(BM_Conv2dFirstLayer)->Unit(benchmark::kMillisecond);

static void BM_Conv2dBackward(benchmark::State& state) {
    const auto x = random_tensor({64, 32, 32}, 4);
    const auto w = random_tensor({128, 64, 3, 3}, 5);
    const auto b = random_tensor({128}, 6);
    for (auto _ : state) {
        nn::Tape<float> tape;
        auto y = nn::conv2d(tape.leaf(x), tape.leaf(w), tape.leaf(b), 1, 1);
        auto s = nn::dot_constant(y, nn::Tensor<float>(y.shape(), 1.0f));
        tape.backward(s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_Conv2dBackward)->Unit(benchmark::kMillisecond);

// Arg: 0 tiny, 1 desk, 2 full.
static void BM_Forward(benchmark::State& state) {
    const auto& prof = profile_arg(static_cast<int>(state.range(0)));
    const auto params = init_params<float>(prof, 1);
    const auto img = random_image(prof.input_res);
    for (auto _ : state) {
        auto p = predict(params, img);
        benchmark::DoNotOptimize(p.positions.data.data());
    }
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_RenderOrientation(benchmark::State& state) {
    const auto model = procedural_style(StyleClass::parse("M_c"), 3);
    Camera cam;
    cam.yaw_deg = 20.0;
    cam.scale = 0.64 / 256.0;
    const auto body = EllipsoidSet::default_body();
    for (auto _ : state) {
        auto r = render_orientation(model, body, cam, 0.05, 9);
        benchmark::DoNotOptimize(r.image.data.data());
    }
}
BENCHMARK(BM_RenderOrientation)->Unit(benchmark::kMillisecond);

static void BM_Gabor(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    GrayImage g;
    g.height = g.width = res;
    g.data.resize(static_cast<std::size_t>(res) * res);
    for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) g.data[static_cast<std::size_t>(y) * res + x] = 0.5f + 0.5f * std::sin(0.8f * x + 0.3f * y);
    }
    const std::vector<std::uint8_t> mask(g.data.size(), 1);
    const auto params = GaborParams::for_resolution(res);
    for (auto _ : state) {
        auto f = gabor_orientation(g, mask, params);
        benchmark::DoNotOptimize(&f);
    }
}
BENCHMARK(BM_Gabor)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Upsample9k(benchmark::State& state) {
    const auto prof = ScaleProfile::desk();
    const auto params = init_params<float>(prof, 1);
    const auto pred = predict(params, random_image(prof.input_res));
    UpsampleOptions o;
    o.target_strands = 9000;
    for (auto _ : state) {
        auto m = upsample(params, pred.features, o);
        benchmark::DoNotOptimize(m.strands.data());
    }
}
BENCHMARK(BM_Upsample9k)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
