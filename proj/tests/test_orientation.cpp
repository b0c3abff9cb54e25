#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hairnet/orientation.hpp"
#include "test_util.hpp"

using namespace hairnet;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Body placed far outside any test viewport.
EllipsoidSet far_body() {
    EllipsoidSet b;
    for (int k = 0; k < 4; ++k) b.items[k] = {{100.0 + 10 * k, 100, 100}, {0.1, 0.1, 0.1}};
    return b;
}

/// Strands given directly as world polylines; grid cells are laid out in one row.
HairModel model_from_world(const std::vector<Polyline>& strands) {
    HairModel m;
    m.grid.rows = 1;
    m.grid.cols = static_cast<int>(strands.size());
    for (const auto& s : strands) {
        m.grid.roots.emplace_back(s.front());
        m.grid.normals.emplace_back(Vec3f{0, 1, 0});
        Polyline local;
        for (const auto& p : s) local.push_back(p - Vec3(Vec3f(s.front())));
        Strand st;
        assign_strand(st, local);
        m.strands.push_back(st);
    }
    return m;
}

Polyline vertical_strand(double x, double z, int m = 20) {
    Polyline p;
    for (int j = 0; j < m; ++j) p.push_back({x, 0.1 - 0.01 * j, z});
    return p;
}

Camera small_camera() {
    Camera cam;
    cam.width = cam.height = 64;
    cam.scale = 0.005;
    return cam;
}

GrayImage stripes(int res, double direction_deg, double period) {
    GrayImage g;
    g.height = g.width = res;
    g.data.resize(static_cast<std::size_t>(res) * res);
    // stripes run along `direction`; intensity varies across it (y up in angle terms)
    const double a = direction_deg * kDeg;
    const double nx = -std::sin(a), ny = std::cos(a);
    for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
            const double t = nx * x + ny * (-y);
            g.data[static_cast<std::size_t>(y) * res + x] =
                static_cast<float>(0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * t / period));
        }
    }
    return g;
}

double angle_diff_deg(double a, double b) {
    double d = std::fmod(std::abs(a - b), std::numbers::pi);
    return std::min(d, std::numbers::pi - d) / kDeg;
}

}  // namespace

TEST(Orientation, EncodeKnownAngles) {
    auto [a0, a1] = encode_angle(0.0);
    EXPECT_NEAR(a0, 1.0, 1e-7);
    EXPECT_NEAR(a1, 0.5, 1e-7);
    auto [b0, b1] = encode_angle(std::numbers::pi / 2);
    EXPECT_NEAR(b0, 0.0, 1e-7);
    EXPECT_NEAR(b1, 0.5, 1e-7);
}

TEST(Orientation, EncodeRoundTrip) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double t = u(rng);
        const auto [c0, c1] = encode_angle(t);
        EXPECT_GE(c0, 0.0f);
        EXPECT_LE(c0, 1.0f);
        const double back = decode_angle(c0, c1);
        EXPECT_GE(back, 0.0);
        EXPECT_LT(back, std::numbers::pi);
        EXPECT_LT(angle_diff_deg(back, t) * kDeg, 1e-6);
    }
}

TEST(Orientation, GaborVerticalStripes) {
    const auto img = stripes(64, 90.0, 8.0);
    const std::vector<std::uint8_t> mask(img.data.size(), 1);
    const auto field = gabor_orientation(img, mask, GaborParams{});
    for (int y = 12; y < 52; ++y) {
        for (int x = 12; x < 52; ++x) {
            EXPECT_LT(angle_diff_deg(field.theta[y * 64 + x], 90.0 * kDeg), 2.0) << x << "," << y;
        }
    }
}

TEST(Orientation, GaborTiltedStripesAreUndirected) {
    const auto a = gabor_orientation(stripes(64, 30.0, 8.0), std::vector<std::uint8_t>(64 * 64, 1), GaborParams{});
    const auto b = gabor_orientation(stripes(64, 210.0, 8.0), std::vector<std::uint8_t>(64 * 64, 1), GaborParams{});
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_LT(angle_diff_deg(a.theta[32 * 64 + 32], 30.0 * kDeg), 3.0);
}

TEST(Orientation, GaborConstantImageHasNoConfidence) {
    GrayImage g;
    g.height = g.width = 32;
    g.data.assign(32 * 32, 0.7f);
    const auto field = gabor_orientation(g, std::vector<std::uint8_t>(32 * 32, 1), GaborParams{});
    for (float c : field.confidence) EXPECT_NEAR(c, 0.0f, 1e-5f);
}

TEST(Orientation, GaborEmptyMaskIsZero) {
    const auto field = gabor_orientation(stripes(32, 0.0, 8.0), std::vector<std::uint8_t>(32 * 32, 0), GaborParams{});
    for (float c : field.confidence) EXPECT_EQ(c, 0.0f);
    for (float t : field.theta) EXPECT_EQ(t, 0.0f);
}

TEST(Orientation, VerticalStrandRendersAtNinetyDegrees) {
    const auto model = model_from_world({vertical_strand(0.0, 0.0)});
    const auto r = render_orientation(model, far_body(), small_camera(), 0.0, 1);
    int hair = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            if (!r.image.is_hair(y, x)) continue;
            ++hair;
            EXPECT_LT(angle_diff_deg(decode_angle(r.image.at(0, y, x), r.image.at(1, y, x)), 90.0 * kDeg), 1.0);
        }
    }
    EXPECT_GT(hair, 20);
    EXPECT_FALSE(r.no_hair);
}

TEST(Orientation, OffChannelsAreZeroOutsideHair) {
    const auto model = model_from_world({vertical_strand(0.0, 0.0)});
    const auto r = render_orientation(model, EllipsoidSet::default_body(), small_camera(), 0.1, 3);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const float label = r.image.at(2, y, x);
            EXPECT_TRUE(label == 0.0f || label == 0.5f || label == 1.0f);
            if (label != 1.0f) {
                EXPECT_EQ(r.image.at(0, y, x), 0.0f);
                EXPECT_EQ(r.image.at(1, y, x), 0.0f);
            }
        }
    }
}

TEST(Orientation, NearerStrandOccludesFarther) {
    const int m = 20;
    const auto model = model_from_world({vertical_strand(0.0, 0.1, m), vertical_strand(0.0, -0.1, m)});
    const auto r = render_orientation(model, far_body(), small_camera(), 0.0, 1);
    // brute force: the far strand's samples project onto pixels the near strand covers
    for (int j = 0; j < m; ++j) {
        EXPECT_EQ(r.visible[j], 1) << j;
        EXPECT_EQ(r.visible[m + j], 0) << j;
    }
}

TEST(Orientation, OccluderNeverAddsVisibility) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int trial = 0; trial < 10; ++trial) {
        // The back strand spans the whole depth range, so the tolerance (a fraction of the
        // model's depth extent) is the same with and without the occluder.
        Polyline back, front;
        for (int j = 0; j < 15; ++j) {
            back.push_back({u(rng) + 0.003 * j, 0.08 - 0.01 * j, j == 0 ? 0.2 : (j == 14 ? -0.2 : 0.5 * u(rng))});
            front.push_back({u(rng) - 0.003 * j, 0.08 - 0.01 * j, 0.1 + u(rng)});
        }
        const auto alone = render_orientation(model_from_world({back}), far_body(), small_camera(), 0.0, 1);
        const auto both = render_orientation(model_from_world({back, front}), far_body(), small_camera(), 0.0, 1);
        std::size_t before = 0, after = 0;
        for (int j = 0; j < 15; ++j) {
            before += alone.visible[j];
            after += both.visible[j];
        }
        EXPECT_LE(after, before);
    }
}

TEST(Orientation, ReversingStrandsKeepsOrientation) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    std::vector<Polyline> fwd, rev;
    for (int i = 0; i < 6; ++i) {
        Polyline p{{u(rng), u(rng), u(rng)}};
        for (int j = 1; j < 12; ++j) p.push_back(p.back() + Vec3{u(rng), u(rng), u(rng)} * 0.15);
        // Dyadic coordinates keep root + offset exact in either direction.
        for (auto& q : p) q = Vec3{std::round(q.x * 1024), std::round(q.y * 1024), std::round(q.z * 1024)} / 1024.0;
        fwd.push_back(p);
        rev.emplace_back(p.rbegin(), p.rend());
    }
    const auto a = render_orientation(model_from_world(fwd), far_body(), small_camera(), 0.0, 1);
    const auto b = render_orientation(model_from_world(rev), far_body(), small_camera(), 0.0, 1);
    ASSERT_EQ(a.image.data.size(), b.image.data.size());
    int differing = 0;
    for (std::size_t k = 0; k < a.image.data.size(); ++k) differing += std::abs(a.image.data[k] - b.image.data[k]) > 1e-6f;
    EXPECT_EQ(differing, 0);
}

TEST(Orientation, RenderIsDeterministic) {
    const auto model = model_from_world({vertical_strand(0.01, 0.0), vertical_strand(-0.02, 0.03)});
    const auto a = render_orientation(model, EllipsoidSet::default_body(), small_camera(), 0.0, 4);
    const auto b = render_orientation(model, EllipsoidSet::default_body(), small_camera(), 0.0, 4);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.visible, b.visible);
    const auto c = render_orientation(model, EllipsoidSet::default_body(), small_camera(), 0.2, 4);
    const auto d = render_orientation(model, EllipsoidSet::default_body(), small_camera(), 0.2, 4);
    EXPECT_EQ(c.image, d.image);
}

TEST(Orientation, ModelOutsideViewportIsFlagged) {
    const auto model = model_from_world({vertical_strand(5.0, 0.0)});
    const auto r = render_orientation(model, far_body(), small_camera(), 0.0, 1);
    EXPECT_TRUE(r.no_hair);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) EXPECT_FALSE(r.image.is_hair(y, x));
}

TEST(Orientation, FilesRoundTrip) {
    test::TempDir dir;
    const auto model = model_from_world({vertical_strand(0.0, 0.0), vertical_strand(0.02, 0.01)});
    const auto r = render_orientation(model, EllipsoidSet::default_body(), small_camera(), 0.1, 8);
    save_orientation(r.image, dir.path() / "a.ornt");
    EXPECT_EQ(load_orientation(dir.path() / "a.ornt"), r.image);
    save_visibility(r.visible, dir.path() / "a.vis");
    EXPECT_EQ(load_visibility(dir.path() / "a.vis", r.visible.size()), r.visible);

    GrayImage g = stripes(16, 45.0, 4.0);
    for (auto& v : g.data) v = std::round(v * 255.0f) / 255.0f;
    save_pgm(g, dir.path() / "g.pgm");
    EXPECT_EQ(load_pgm(dir.path() / "g.pgm").data, g.data);
}

TEST(Orientation, PhotoPathLabelsAndEncodes) {
    const auto g = stripes(32, 90.0, 8.0);
    std::vector<std::uint8_t> labels(32 * 32, 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) labels[y * 32 + x] = x < 16 ? 255 : (y < 16 ? 128 : 0);
    const auto img = orientation_from_photo(g, labels, GaborParams::for_resolution(32));
    EXPECT_EQ(img.at(2, 5, 5), OrientationImage::kHair);
    EXPECT_EQ(img.at(2, 5, 20), OrientationImage::kBody);
    EXPECT_EQ(img.at(2, 20, 20), OrientationImage::kBackground);
    EXPECT_EQ(img.at(0, 5, 20), 0.0f);
    EXPECT_LT(angle_diff_deg(decode_angle(img.at(0, 16, 8), img.at(1, 16, 8)), 90.0 * kDeg), 3.0);
}
