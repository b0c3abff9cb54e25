#include "hairnet/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hairnet/gradcheck.hpp"
#include "hairnet/losses.hpp"

namespace hairnet {

namespace {

using nn::Shape;
using nn::Tape;
using nn::Tensor;
using nn::Var;

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : t.data) v = u(rng);
    return t;
}

/// Values at least `margin` away from zero so relu stays off its kink.
Tensor<double> away_from_zero(Shape shape, std::mt19937_64& rng, double margin) {
    Tensor<double> t = random_tensor(std::move(shape), rng);
    for (auto& v : t.data) v = v < 0.0 ? v - margin : v + margin;
    return t;
}

/// Distinct values spaced by `gap` so max pooling has no ties.
Tensor<double> distinct(Shape shape, std::mt19937_64& rng, double gap) {
    Tensor<double> t(std::move(shape));
    for (std::size_t k = 0; k < t.size(); ++k) t.data[k] = gap * static_cast<double>(k);
    std::shuffle(t.data.begin(), t.data.end(), rng);
    return t;
}

struct Check {
    std::string name;
    std::function<nn::GradCheckResult(std::mt19937_64&)> run;
};

std::vector<Check> operator_checks() {
    using nn::GradCheckResult;
    auto reduce = [](const Var<double>& y, std::mt19937_64& rng) {
        return nn::dot_constant(y, random_tensor(y.shape(), rng));
    };
    std::vector<Check> checks;
    checks.push_back({"conv2d", [=](std::mt19937_64& rng) {
        std::uniform_int_distribution<int> pick(0, 2);
        const int stride = 1 + pick(rng) % 2, pad = pick(rng), k = 1 + pick(rng);
        std::mt19937_64 rr(rng());
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) {
                std::mt19937_64 local = rr;
                return reduce(nn::conv2d(v[0], v[1], v[2], stride, pad), local);
            },
            {random_tensor({2, 5, 5}, rng), random_tensor({3, 2, k, k}, rng), random_tensor({3}, rng)});
    }});
    checks.push_back({"max_pool2d", [=](std::mt19937_64& rng) {
        std::mt19937_64 rr(rng());
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) {
                std::mt19937_64 local = rr;
                return reduce(nn::max_pool2d(v[0], 2), local);
            },
            {distinct({2, 4, 4}, rng, 0.01)});
    }});
    checks.push_back({"relu", [=](std::mt19937_64& rng) {
        std::mt19937_64 rr(rng());
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) {
                std::mt19937_64 local = rr;
                return reduce(nn::relu(v[0]), local);
            },
            {away_from_zero({3, 4}, rng, 0.01)});
    }});
    checks.push_back({"tanh", [=](std::mt19937_64& rng) {
        std::mt19937_64 rr(rng());
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) {
                std::mt19937_64 local = rr;
                return reduce(nn::tanh(v[0]), local);
            },
            {random_tensor({3, 4}, rng, -2.0, 2.0)});
    }});
    checks.push_back({"linear", [=](std::mt19937_64& rng) {
        std::mt19937_64 rr(rng());
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) {
                std::mt19937_64 local = rr;
                return reduce(nn::linear(v[0], v[1], v[2]), local);
            },
            {random_tensor({5}, rng), random_tensor({4, 5}, rng), random_tensor({4}, rng)});
    }});
    checks.push_back({"upsample_bilinear2x", [=](std::mt19937_64& rng) {
        std::mt19937_64 rr(rng());
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) {
                std::mt19937_64 local = rr;
                return reduce(nn::upsample_bilinear2x(v[0]), local);
            },
            {random_tensor({2, 3, 3}, rng)});
    }});
    checks.push_back({"reshape", [=](std::mt19937_64& rng) {
        std::mt19937_64 rr(rng());
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) {
                std::mt19937_64 local = rr;
                return reduce(nn::tanh(nn::reshape(v[0], {4, 3})), local);
            },
            {random_tensor({2, 6}, rng)});
    }});
    checks.push_back({"loss_pos", [](std::mt19937_64& rng) {
        const auto gt = random_tensor({6, 2, 2}, rng, -0.2, 0.2);
        Tensor<double> w({2, 2, 2});
        for (auto& v : w.data) v = rng() % 2 ? VisibilityWeights::kVisible : VisibilityWeights::kInvisible;
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) { return loss_pos(v[0], gt, w); },
            {random_tensor({6, 2, 2}, rng, -0.2, 0.2)});
    }});
    checks.push_back({"loss_curv", [](std::mt19937_64& rng) {
        const auto gt = random_tensor({3, 2, 2}, rng, 0.0, 20.0);
        Tensor<double> w({3, 2, 2});
        for (auto& v : w.data) v = rng() % 2 ? VisibilityWeights::kVisible : VisibilityWeights::kInvisible;
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) { return loss_curv(v[0], gt, w); },
            {random_tensor({3, 2, 2}, rng, 0.0, 20.0)});
    }});
    checks.push_back({"loss_collision", [](std::mt19937_64& rng) {
        // Strands rooted near the head surface and reaching inside it.
        CollisionContext ctx;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 4; ++i) ctx.roots.push_back(Vec3{0.05 * u(rng), 0.11, 0.05 * u(rng)});
        ctx.pose = Pose::from_euler_degrees(20.0 * u(rng), 10.0 * u(rng), 10.0 * u(rng), {0.01, 0.02, 0.0});
        for (auto& r : ctx.roots) r = ctx.pose.apply(r);
        auto x = random_tensor({9, 2, 2}, rng, -0.04, 0.04);
        // Keep every segment component away from zero so the L1 norm stays differentiable.
        for (auto& v : x.data) v = v < 0.0 ? v - 0.005 : v + 0.005;
        return nn::check_gradients(
            [&](Tape<double>&, const std::vector<Var<double>>& v) { return loss_collision(v[0], ctx); }, {x});
    }});
    return checks;
}

}  // namespace

bool run_selftest(std::ostream& out, int instances, std::uint64_t seed) {
    bool ok = true;
    char line[160];
    std::mt19937_64 rng(seed);
    for (const auto& check : operator_checks()) {
        double worst = 0.0;
        for (int k = 0; k < instances; ++k) worst = std::max(worst, check.run(rng).rel_error);
        const bool pass = worst < 1e-4;
        ok = ok && pass;
        std::snprintf(line, sizeof line, "%-4s gradient %-20s max rel err %.3e\n", pass ? "ok" : "FAIL", check.name.c_str(), worst);
        out << line;
    }

    auto expect = [&](const char* name, double got, double want) {
        const bool pass = std::abs(got - want) <= 1e-9;
        ok = ok && pass;
        std::snprintf(line, sizeof line, "%-4s oracle   %-20s got %.12g want %.12g\n", pass ? "ok" : "FAIL", name, got, want);
        out << line;
    };
    Ellipsoid unit{{0, 0, 0}, {1, 1, 1}};
    expect("dist center", ellipsoid_dist({0, 0, 0}, unit), 1.0);
    expect("dist surface", ellipsoid_dist({1, 0, 0}, unit), 0.0);
    expect("dist 2a", ellipsoid_dist({2, 0, 0}, unit), -3.0);

    EllipsoidSet one;
    for (auto& e : one.items) e = {{100, 100, 100}, {1, 1, 1}};
    one.items[0] = unit;
    const std::vector<Vec3> pts = {{0, 0, 0}, {0.5, 0, 0}};
    expect("collision M=2", collision_value(pts, 2, one), 0.1875);

    Tensor<double> pred({3, 1, 1}, {0.1, 0.0, 0.0}), gt({3, 1, 1}), wv({1, 1, 1}, {10.0}), wi({1, 1, 1}, {0.1});
    expect("pos visible", pos_loss_value(pred, gt, wv), 0.1);
    expect("pos invisible", pos_loss_value(pred, gt, wi), 0.001);
    Tensor<double> c({1, 1, 1}, {0.5}), c0({1, 1, 1});
    expect("curv visible", curv_loss_value(c, c0, wv), 2.5);
    expect("weight ratio", curv_loss_value(c, c0, wv) / curv_loss_value(c, c0, wi), 100.0);
    LossOptions opts;
    expect("total", combine({0.1, 2.5, 0.1875, 0.0}, opts), 0.1 + 2.5 + 1.875e-5);
    return ok;
}

}  // namespace hairnet
