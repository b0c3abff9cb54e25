#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fd_oracle.hpp"
#include "hairnet/adam.hpp"
#include "hairnet/errors.hpp"
#include "hairnet/tensor.hpp"

using namespace hairnet;
using namespace hairnet::nn;

namespace {

/// Projects an output onto a fixed random direction so every output entry gets a gradient.
template <typename T>
Var<T> project(const Var<T>& y, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return dot_constant(y, test::random_tensor<T>(y.shape(), rng));
}

template <typename T>
Tensor<T> distinct_values(Shape shape, std::mt19937_64& rng) {
    // A shuffled ramp keeps max-pool winners far apart from each other.
    Tensor<T> t(std::move(shape));
    for (std::size_t k = 0; k < t.size(); ++k) t.data[k] = static_cast<T>(0.05 * static_cast<double>(k));
    std::shuffle(t.data.begin(), t.data.end(), rng);
    return t;
}

}  // namespace

TEST(Tensor, ConvOutputShape) {
    EXPECT_EQ(conv_output_size(256, 8, 2, 3), 128);
    Tape<float> tape;
    auto x = tape.constant(Tensor<float>({3, 256, 256}));
    auto w = tape.constant(Tensor<float>({32, 3, 8, 8}));
    auto b = tape.constant(Tensor<float>({32}));
    EXPECT_EQ(conv2d(x, w, b, 2, 3).shape(), (Shape{32, 128, 128}));
}

TEST(Tensor, IdentityKernelCopiesInput) {
    std::mt19937_64 rng(1);
    const auto input = test::random_tensor<float>({3, 5, 7}, rng);
    Tensor<float> w({3, 3, 1, 1});
    for (int c = 0; c < 3; ++c) w.data[c * 3 + c] = 1.0f;
    Tape<float> tape;
    const auto y = conv2d(tape.constant(input), tape.constant(w), tape.constant(Tensor<float>({3})), 1, 0);
    EXPECT_EQ(y.value().data, input.data);
}

TEST(Tensor, ConvIsLinearWithoutBias) {
    std::mt19937_64 rng(2);
    const auto x = test::random_tensor<float>({2, 9, 9}, rng);
    const auto w = test::random_tensor<float>({4, 2, 3, 3}, rng);
    auto x3 = x;
    for (auto& v : x3.data) v *= 3.0f;
    Tape<float> tape;
    const auto zero = tape.constant(Tensor<float>({4}));
    const auto y1 = conv2d(tape.constant(x), tape.constant(w), zero, 2, 1).value();
    const auto y3 = conv2d(tape.constant(x3), tape.constant(w), zero, 2, 1).value();
    for (std::size_t k = 0; k < y1.size(); ++k) EXPECT_NEAR(y3.data[k], 3.0f * y1.data[k], 1e-5 * std::max(1.0f, std::abs(y3.data[k])));
}

TEST(Tensor, ConvMatchesDirectSum) {
    std::mt19937_64 rng(3);
    const auto x = test::random_tensor<double>({2, 6, 5}, rng);
    const auto w = test::random_tensor<double>({3, 2, 3, 3}, rng);
    const auto b = test::random_tensor<double>({3}, rng);
    Tape<double> tape;
    const auto y = conv2d(tape.constant(x), tape.constant(w), tape.constant(b), 2, 1).value();
    ASSERT_EQ(y.shape, (Shape{3, 3, 3}));
    for (int o = 0; o < 3; ++o) {
        for (int oy = 0; oy < 3; ++oy) {
            for (int ox = 0; ox < 3; ++ox) {
                double acc = b.data[o];
                for (int c = 0; c < 2; ++c)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
                            if (iy < 0 || iy >= 6 || ix < 0 || ix >= 5) continue;
                            acc += w.data[((o * 2 + c) * 3 + ky) * 3 + kx] * x.data[(c * 6 + iy) * 5 + ix];
                        }
                EXPECT_NEAR(y.data[(o * 3 + oy) * 3 + ox], acc, 1e-12);
            }
        }
    }
}

TEST(Tensor, ConvShapeErrorsNameTheDimension) {
    Tape<float> tape;
    auto x = tape.constant(Tensor<float>({3, 8, 8}));
    auto w = tape.constant(Tensor<float>({4, 2, 3, 3}));
    auto b = tape.constant(Tensor<float>({4}));
    try {
        conv2d(x, w, b, 1, 1);
        FAIL();
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("channels"), std::string::npos);
    }
}

TEST(Tensor, ConvGradientsF64) {
    std::mt19937_64 rng(4);
    const test::ScalarFn<double> f = [](Tape<double>&, const std::vector<Var<double>>& v) {
        return project(conv2d(v[0], v[1], v[2], 2, 1), 99);
    };
    const double err = test::fd_relative_error<double>(
        f, {test::random_tensor<double>({2, 7, 6}, rng), test::random_tensor<double>({3, 2, 3, 3}, rng),
            test::random_tensor<double>({3}, rng)}, 1e-6);
    EXPECT_LT(err, 1e-6);
}

TEST(Tensor, ConvGradientsF32) {
    std::mt19937_64 rng(5);
    const test::ScalarFn<float> f = [](Tape<float>&, const std::vector<Var<float>>& v) {
        return project(conv2d(v[0], v[1], v[2], 1, 1), 98);
    };
    const double err = test::fd_relative_error<float>(
        f, {test::random_tensor<float>({2, 5, 5}, rng), test::random_tensor<float>({2, 2, 3, 3}, rng),
            test::random_tensor<float>({2}, rng)}, 1e-2);
    EXPECT_LT(err, 1e-3);
}

TEST(Tensor, PoolingAndActivationsGradients) {
    std::mt19937_64 rng(6);
    const test::ScalarFn<double> pool = [](Tape<double>&, const std::vector<Var<double>>& v) {
        return project(max_pool2d(v[0], 2), 1);
    };
    EXPECT_LT(test::fd_relative_error<double>(pool, {distinct_values<double>({2, 4, 6}, rng)}, 1e-6), 1e-6);

    auto away_from_kink = test::random_tensor<double>({20}, rng);
    for (auto& v : away_from_kink.data) v += v >= 0 ? 0.1 : -0.1;
    const test::ScalarFn<double> relu_fn = [](Tape<double>&, const std::vector<Var<double>>& v) { return project(relu(v[0]), 2); };
    EXPECT_LT(test::fd_relative_error<double>(relu_fn, {away_from_kink}, 1e-6), 1e-6);

    const test::ScalarFn<double> tanh_fn = [](Tape<double>&, const std::vector<Var<double>>& v) { return project(tanh(v[0]), 3); };
    EXPECT_LT(test::fd_relative_error<double>(tanh_fn, {test::random_tensor<double>({3, 4}, rng, -2, 2)}, 1e-6), 1e-6);

    const test::ScalarFn<double> lin = [](Tape<double>&, const std::vector<Var<double>>& v) {
        return project(linear(v[0], v[1], v[2]), 4);
    };
    EXPECT_LT(test::fd_relative_error<double>(lin, {test::random_tensor<double>({6}, rng), test::random_tensor<double>({4, 6}, rng),
                                                    test::random_tensor<double>({4}, rng)}, 1e-6), 1e-6);

    const test::ScalarFn<double> up = [](Tape<double>&, const std::vector<Var<double>>& v) {
        return project(upsample_bilinear2x(v[0]), 5);
    };
    EXPECT_LT(test::fd_relative_error<double>(up, {test::random_tensor<double>({2, 3, 4}, rng)}, 1e-6), 1e-6);
}

TEST(Tensor, MaxPoolFullProfileShape) {
    Tape<float> tape;
    const auto y = max_pool2d(tape.constant(Tensor<float>({512, 8, 8})), 8);
    EXPECT_EQ(y.shape(), (Shape{512, 1, 1}));
    EXPECT_THROW(max_pool2d(tape.constant(Tensor<float>({2, 4, 4})), 8), ShapeError);
}

TEST(Tensor, MaxPoolRoutesGradientToFirstMax) {
    Tape<double> tape;
    auto x = tape.leaf(Tensor<double>({1, 2, 2}, {3.0, 3.0, 1.0, 3.0}));
    const auto y = max_pool2d(x, 2);
    EXPECT_EQ(y.item(), 3.0);
    tape.backward(y);
    EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(Tensor, ElementwiseValues) {
    Tape<float> tape;
    const auto r = relu(tape.constant(Tensor<float>({2}, {-1.0f, 2.0f}))).value();
    EXPECT_EQ(r.data, (std::vector<float>{0.0f, 2.0f}));
    EXPECT_EQ(tanh(tape.constant(Tensor<float>({1}, {0.0f}))).item(), 0.0f);
}

TEST(Tensor, UpsampleKeepsConstants) {
    Tape<float> tape;
    const auto y = upsample_bilinear2x(tape.constant(Tensor<float>({2, 3, 5}, 0.75f))).value();
    EXPECT_EQ(y.shape, (Shape{2, 6, 10}));
    for (float v : y.data) EXPECT_FLOAT_EQ(v, 0.75f);
}

TEST(Tensor, UpsampleHalfPixelConvention) {
    // 1 x 1 x 2 row [0, 1]: output centres sit at input coordinates -0.25, 0.25, 0.75, 1.25.
    Tape<double> tape;
    const auto y = upsample_bilinear2x(tape.constant(Tensor<double>({1, 1, 2}, {0.0, 1.0}))).value();
    ASSERT_EQ(y.shape, (Shape{1, 2, 4}));
    const std::vector<double> row{0.0, 0.25, 0.75, 1.0};
    for (int x = 0; x < 4; ++x) {
        EXPECT_NEAR(y.data[x], row[x], 1e-15);
        EXPECT_NEAR(y.data[4 + x], row[x], 1e-15);
    }
}

TEST(Tensor, ForwardBackwardIsDeterministic) {
    std::mt19937_64 rng(7);
    const auto x = test::random_tensor<float>({3, 16, 16}, rng);
    const auto w = test::random_tensor<float>({8, 3, 4, 4}, rng);
    auto run = [&] {
        Tape<float> tape;
        auto wv = tape.leaf(w);
        const auto y = project(tanh(conv2d(tape.constant(x), wv, tape.constant(Tensor<float>({8})), 2, 1)), 11);
        tape.backward(y);
        return std::vector<float>(wv.grad().begin(), wv.grad().end());
    };
    EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParams) {
    Tensor<float> p({3}, {1.0f, -2.0f, 0.5f});
    const auto before = p;
    AdamState<float> st;
    std::vector<Tensor<float>*> ps{&p};
    st.init_like(ps);
    const std::vector<float> g(3, 0.0f);
    const std::vector<std::span<const float>> gs{g};
    adam_step<float>(ps, gs, 1e-3, st);
    EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Tensor<double> p({2}, {0.0, 0.0});
    AdamState<double> st;
    std::vector<Tensor<double>*> ps{&p};
    st.init_like(ps);
    const std::vector<double> g{0.3, -7.0};
    const std::vector<std::span<const double>> gs{g};
    adam_step<double>(ps, gs, 1e-2, st);
    // m_hat = g, v_hat = g^2 after bias correction: step = lr * g / (|g| + eps)
    EXPECT_NEAR(p.data[0], -1e-2 * 0.3 / (0.3 + 1e-8), 1e-12);
    EXPECT_NEAR(p.data[1], 1e-2 * 7.0 / (7.0 + 1e-8), 1e-12);
}

TEST(Adam, QuadraticBowlConverges) {
    Tensor<double> p({3}, {2.0, -1.0, 0.5});
    const std::vector<double> centre{0.3, 0.7, -0.2}, curvature{1.0, 4.0, 0.5};
    AdamState<double> st;
    std::vector<Tensor<double>*> ps{&p};
    st.init_like(ps);
    int steps = 0;
    for (; steps < 5000; ++steps) {
        std::vector<double> g(3);
        for (int k = 0; k < 3; ++k) g[k] = curvature[k] * (p.data[k] - centre[k]);
        const std::vector<std::span<const double>> gs{g};
        const double lr = steps < 3000 ? 1e-2 : 1e-3;
        adam_step<double>(ps, gs, lr, st);
    }
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(p.data[k], centre[k], 1e-4);
}

TEST(Adam, NonFiniteGradientAbortsStep) {
    Tensor<float> p({2}, {1.0f, 2.0f});
    AdamState<float> st;
    std::vector<Tensor<float>*> ps{&p};
    st.init_like(ps);
    const std::vector<float> good{0.1f, 0.2f};
    adam_step<float>(ps, std::vector<std::span<const float>>{good}, 1e-3, st);
    const auto p_before = p;
    const auto m_before = st.m;
    const auto step_before = st.step;
    const std::vector<float> bad{std::numeric_limits<float>::quiet_NaN(), 0.0f};
    try {
        adam_step<float>(ps, std::vector<std::span<const float>>{bad}, 1e-3, st);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("divergence"), std::string::npos);
    }
    EXPECT_EQ(p, p_before);
    EXPECT_EQ(st.m, m_before);
    EXPECT_EQ(st.step, step_before);
}
