#include <gtest/gtest.h>

#include <random>

#include "fd_oracle.hpp"
#include "hairnet/datagen.hpp"
#include "hairnet/errors.hpp"
#include "hairnet/eval.hpp"
#include "hairnet/losses.hpp"

using namespace hairnet;
using namespace hairnet::nn;

namespace {

/// Unit sphere at the origin; the other three slots are tiny and far away.
EllipsoidSet unit_sphere_body() {
    EllipsoidSet b;
    b.items[0] = {{0, 0, 0}, {1, 1, 1}};
    for (int k = 1; k < 4; ++k) b.items[k] = {{100.0 * k, 100, 100}, {0.01, 0.01, 0.01}};
    return b;
}

Tensor<double> single(std::initializer_list<double> v, Shape shape) { return Tensor<double>(std::move(shape), v); }

Tensor<double> weights_of(std::uint8_t bit, int samples = 1) {
    std::vector<std::uint8_t> vis(static_cast<std::size_t>(samples), bit);
    return VisibilityWeights::tensor<double>(vis, samples, 1, 1);
}

double eval_pos(const Tensor<double>& p, const Tensor<double>& g, const Tensor<double>& w) {
    Tape<double> t;
    return loss_pos(t.leaf(p), g, w).item();
}

}  // namespace

TEST(Losses, PositionHandValues) {
    const auto pred = single({0.1, 0, 0}, {3, 1, 1});
    const auto gt = single({0, 0, 0}, {3, 1, 1});
    EXPECT_NEAR(eval_pos(pred, gt, weights_of(1)), 0.1, 1e-9);
    EXPECT_NEAR(eval_pos(pred, gt, weights_of(0)), 0.001, 1e-9);
    EXPECT_EQ(eval_pos(gt, gt, weights_of(1)), 0.0);
}

TEST(Losses, CurvatureHandValuesAndRatio) {
    const auto pred = single({0.5}, {1, 1, 1});
    const auto gt = single({0.0}, {1, 1, 1});
    Tape<double> t;
    EXPECT_NEAR(loss_curv(t.leaf(pred), gt, weights_of(1)).item(), 2.5, 1e-9);
    EXPECT_EQ(loss_curv(t.leaf(gt), gt, weights_of(1)).item(), 0.0);

    std::mt19937_64 rng(3);
    const auto a = test::random_tensor<double>({5, 2, 3}, rng);
    const auto b = test::random_tensor<double>({5, 2, 3}, rng);
    std::vector<std::uint8_t> on(30, 1), off(30, 0);
    const double vis = curv_loss_value(a, b, VisibilityWeights::tensor<double>(on, 5, 2, 3));
    const double hid = curv_loss_value(a, b, VisibilityWeights::tensor<double>(off, 5, 2, 3));
    EXPECT_NEAR(vis / hid, 100.0, 1e-9);
}

TEST(Losses, VisibilityLayoutAndUniform) {
    // Two cells, two samples; only strand 1 sample 0 visible.
    const std::vector<std::uint8_t> vis{0, 0, 1, 0};
    const auto w = VisibilityWeights::tensor<double>(vis, 2, 1, 2);
    EXPECT_EQ(w.data, (std::vector<double>{0.1, 10.0, 0.1, 0.1}));
    const auto u = VisibilityWeights::tensor<double>(vis, 2, 1, 2, true);
    EXPECT_EQ(u.data, (std::vector<double>{1, 1, 1, 1}));
    EXPECT_THROW(VisibilityWeights::tensor<double>(vis, 3, 1, 2), ShapeError);
}

TEST(Losses, EllipsoidDistValues) {
    const Ellipsoid e{{0.1, -0.2, 0.3}, {0.5, 0.7, 0.9}};
    EXPECT_NEAR(ellipsoid_dist({0.1, -0.2, 0.3}, e), 1.0, 1e-12);
    EXPECT_NEAR(ellipsoid_dist({0.6, -0.2, 0.3}, e), 0.0, 1e-12);
    EXPECT_NEAR(ellipsoid_dist({1.1, -0.2, 0.3}, e), -3.0, 1e-12);
    EXPECT_NEAR(ellipsoid_dist({0.1, 0.5, 0.3}, e), 0.0, 1e-12);
}

TEST(Losses, CollisionTwoSampleHandValue) {
    const std::vector<Vec3> pts{{0, 0, 0}, {0.5, 0, 0}};
    const auto body = unit_sphere_body();
    EXPECT_NEAR(collision_value(pts, 2, body), 0.1875, 1e-12);

    // Same case through the differentiable path: one cell, root at the origin.
    Tape<double> t;
    CollisionContext ctx{{Vec3{0, 0, 0}}, Pose{}, body, false};
    const auto v = loss_collision(t.leaf(single({0, 0, 0, 0.5, 0, 0}, {6, 1, 1})), ctx);
    EXPECT_NEAR(v.item(), 0.1875, 1e-12);

    auto big = body;
    big.items[0].semi_axes = {2, 2, 2};
    EXPECT_GT(collision_value(pts, 2, big), collision_value(pts, 2, body));

    const std::vector<Vec3> outside{{2, 0, 0}, {3, 0, 0}};
    EXPECT_EQ(collision_value(outside, 2, body), 0.0);
}

TEST(Losses, CollisionUsesL1SegmentLength) {
    const std::vector<Vec3> pts{{0, 0, 0}, {0.3, 0.4, 0}};
    const auto body = unit_sphere_body();
    const double dist = 1.0 - 0.25;
    EXPECT_NEAR(collision_value(pts, 2, body), 0.7 * dist / 2.0, 1e-12);
    EXPECT_NEAR(collision_value(pts, 2, body, true), 0.5 * dist / 2.0, 1e-12);
}

TEST(Losses, CollisionZeroWhenSegmentsHaveNoLength) {
    const std::vector<Vec3> pts{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    EXPECT_EQ(collision_value(pts, 3, unit_sphere_body()), 0.0);
}

TEST(Losses, TotalCombinesWithDefaultLambdas) {
    const LossComponents c{0.1, 2.5, 0.1875, 0.0};
    LossOptions opts;
    EXPECT_NEAR(combine(c, opts), 0.1 + 2.5 + 1.875e-5, 1e-9);
    opts.lambda_col = 0.0;
    EXPECT_EQ(combine(c, opts), 0.1 + 2.5);
    opts = {};
    opts.no_collision = true;
    EXPECT_EQ(combine(c, opts), 0.1 + 2.5);
    opts.no_curvature = true;
    EXPECT_EQ(combine(c, opts), 0.1);
}

TEST(Losses, TotalOfPerfectCollisionFreePrediction) {
    Tape<double> t;
    LossTargets<double> tg;
    tg.positions = single({0, 0, 0, 0, 0.1, 0}, {6, 1, 1});
    tg.curvatures = single({0, 0}, {2, 1, 1});
    tg.weights = weights_of(1, 2);
    tg.collision = {{Vec3{3, 0, 0}}, Pose{}, unit_sphere_body(), false};
    const auto r = loss_total(t.leaf(tg.positions), t.leaf(tg.curvatures), tg, LossOptions{});
    EXPECT_EQ(r.total.item(), 0.0);
    EXPECT_EQ(r.values.total, 0.0);
}

TEST(Losses, TotalMatchesComponents) {
    std::mt19937_64 rng(9);
    LossTargets<double> tg;
    tg.positions = test::random_tensor<double>({9, 2, 2}, rng, -0.3, 0.3);
    tg.curvatures = test::random_tensor<double>({3, 2, 2}, rng, 0, 5);
    std::vector<std::uint8_t> vis(12);
    for (auto& v : vis) v = static_cast<std::uint8_t>(rng() & 1);
    tg.weights = VisibilityWeights::tensor<double>(vis, 3, 2, 2);
    tg.collision = {{{0.1, 0, 0}, {0, 0.1, 0}, {-0.1, 0, 0}, {0, -0.1, 0}}, Pose{}, unit_sphere_body(), false};
    const auto pred_p = test::random_tensor<double>({9, 2, 2}, rng, -0.3, 0.3);
    const auto pred_c = test::random_tensor<double>({3, 2, 2}, rng, 0, 5);

    Tape<double> t;
    const auto full = loss_total(t.leaf(pred_p), t.leaf(pred_c), tg, LossOptions{});
    EXPECT_GT(full.values.col, 0.0);
    EXPECT_NEAR(full.total.item(), full.values.pos + full.values.curv + 1e-4 * full.values.col, 1e-12);

    LossOptions off;
    off.no_collision = true;
    const auto nc = loss_total(t.leaf(pred_p), t.leaf(pred_c), tg, off);
    EXPECT_EQ(nc.values.col, full.values.col);  // still reported
    EXPECT_NEAR(nc.total.item(), nc.values.pos + nc.values.curv, 1e-12);
    EXPECT_GE(full.values.pos, 0.0);
    EXPECT_GE(full.values.curv, 0.0);
}

TEST(Losses, NonNegativeOnRandomInputs) {
    std::mt19937_64 rng(10);
    for (int k = 0; k < 50; ++k) {
        const auto a = test::random_tensor<double>({6, 2, 1}, rng, -2, 2);
        const auto b = test::random_tensor<double>({6, 2, 1}, rng, -2, 2);
        std::vector<std::uint8_t> vis(4);
        for (auto& v : vis) v = static_cast<std::uint8_t>(rng() & 1);
        const auto w = VisibilityWeights::tensor<double>(vis, 2, 2, 1);
        EXPECT_GE(pos_loss_value(a, b, w), 0.0);
        std::vector<Vec3> pts;
        for (double x : a.data) pts.push_back({x, x * 0.5, -x});
        EXPECT_GE(collision_value(pts, 3, EllipsoidSet::default_body()), 0.0);
    }
}

TEST(Losses, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(11);
    const Pose pose = Pose::from_euler_degrees(20, -10, 5, {0.01, 0.02, -0.03});
    for (int trial = 0; trial < 20; ++trial) {
        const auto gt = test::random_tensor<double>({12, 2, 3}, rng);
        const auto gc = test::random_tensor<double>({4, 2, 3}, rng);
        std::vector<std::uint8_t> vis(24);
        for (auto& v : vis) v = static_cast<std::uint8_t>(rng() & 1);
        const auto w = VisibilityWeights::tensor<double>(vis, 4, 2, 3);

        const test::ScalarFn<double> fp = [&](Tape<double>&, const std::vector<Var<double>>& x) { return loss_pos(x[0], gt, w); };
        const test::ScalarFn<double> fc = [&](Tape<double>&, const std::vector<Var<double>>& x) { return loss_curv(x[0], gc, w); };
        EXPECT_LT(test::fd_relative_error(fp, {test::random_tensor<double>({12, 2, 3}, rng)}, 1e-6), 1e-4);
        EXPECT_LT(test::fd_relative_error(fc, {test::random_tensor<double>({4, 2, 3}, rng)}, 1e-6), 1e-4);

        CollisionContext ctx;
        ctx.pose = pose;
        ctx.body = unit_sphere_body();
        ctx.euclidean = trial % 2 == 1;
        for (int i = 0; i < 6; ++i) ctx.roots.push_back({0.1 * i - 0.3, 0.2, 0.0});
        const test::ScalarFn<double> fcol = [&](Tape<double>&, const std::vector<Var<double>>& x) {
            return loss_collision(x[0], ctx);
        };
        const auto start = test::random_tensor<double>({12, 2, 3}, rng, -0.4, 0.4);
        EXPECT_GT(test::evaluate(fcol, {start}), 0.0);
        EXPECT_LT(test::fd_relative_error(fcol, {start}, 1e-7), 1e-4) << "trial " << trial;
    }
}

TEST(Losses, EvalCollisionErrorIsTheLossValue) {
    GeneratorOptions opts;
    opts.samples = 16;
    opts.scalp_res = 8;
    const auto model = procedural_style(StyleClass::parse("M_s"), 4, opts);
    const auto pose = Pose::from_euler_degrees(15, 5, 0);
    const auto cam = transformed(model, pose);
    const auto body = EllipsoidSet::default_body();
    EXPECT_EQ(collision_error(cam, body, pose), collision_value(cam, body, pose));

    // And the differentiable path agrees to float precision on the network layout.
    Tape<float> t;
    CollisionContext ctx;
    ctx.pose = pose;
    ctx.body = body;
    for (const auto& r : cam.grid.roots) ctx.roots.emplace_back(r);
    const auto p = positions_tensor<float>(cam, 8, 8);
    EXPECT_NEAR(loss_collision(t.leaf(p), ctx).item(), collision_value(cam, body, pose), 1e-9);
}
