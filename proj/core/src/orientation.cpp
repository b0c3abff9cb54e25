#include "hairnet/orientation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

#include "hairnet/binary_io.hpp"
#include "hairnet/errors.hpp"

namespace hairnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint32_t kOrntVersion = 1;

double wrap_pi(double theta) {
    double t = std::fmod(theta, kPi);
    if (t < 0.0) t += kPi;
    if (t >= kPi) t -= kPi;
    return t;
}

// Entry depth of the camera ray through (x, y) into an ellipsoid, +inf when missed.
double ray_entry_depth(const Pose& pose, const Ellipsoid& e, double x, double y) {
    // Ray in camera frame: origin (x, y, 0), direction (0, 0, -1); depth = distance along it.
    const Vec3 o = pose.apply_inverse({x, y, 0.0}) - e.center;
    const Vec3 d = pose.rotate_inverse({0.0, 0.0, -1.0});
    const Vec3 inv{1.0 / e.semi_axes.x, 1.0 / e.semi_axes.y, 1.0 / e.semi_axes.z};
    const Vec3 os{o.x * inv.x, o.y * inv.y, o.z * inv.z};
    const Vec3 ds{d.x * inv.x, d.y * inv.y, d.z * inv.z};
    const double a = dot(ds, ds);
    const double b = 2.0 * dot(os, ds);
    const double c = dot(os, os) - 1.0;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    return (-b - std::sqrt(disc)) / (2.0 * a);
}

}  // namespace

std::pair<float, float> encode_angle(double theta) {
    return {static_cast<float>((std::cos(2.0 * theta) + 1.0) * 0.5),
            static_cast<float>((std::sin(2.0 * theta) + 1.0) * 0.5)};
}

double decode_angle(float c0, float c1) {
    const double two_theta = std::atan2(2.0 * c1 - 1.0, 2.0 * c0 - 1.0);
    return wrap_pi(0.5 * two_theta);
}

std::size_t count_visible(std::span<const std::uint8_t> visible) {
    return static_cast<std::size_t>(std::count_if(visible.begin(), visible.end(), [](auto v) { return v != 0; }));
}

RenderResult render_orientation(const HairModel& model, const EllipsoidSet& body, const Camera& cam,
                                double noise_sigma, std::uint64_t seed) {
    if (!(cam.scale > 0.0) || cam.width <= 0 || cam.height <= 0) throw std::invalid_argument("invalid camera");
    const int w = cam.width, h = cam.height;
    const auto npix = static_cast<std::size_t>(w) * h;
    const Pose pose = cam.pose();
    const auto m = static_cast<std::size_t>(model.samples_per_strand());

    // Project every sample once.
    const auto world = to_world(model);
    std::vector<Camera::Projected> proj(world.size());
    double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
    for (std::size_t k = 0; k < world.size(); ++k) {
        proj[k] = cam.project_camera_point(pose.apply(world[k]));
        dmin = std::min(dmin, proj[k].depth);
        dmax = std::max(dmax, proj[k].depth);
    }
    const double eps = world.empty() ? 0.0 : std::max(0.01 * (dmax - dmin), 1e-6);

    std::vector<double> body_depth(npix, std::numeric_limits<double>::infinity());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double cx = (x + 0.5 - 0.5 * w) * cam.scale;
            const double cy = (0.5 * h - y - 0.5) * cam.scale;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& e : body.items) best = std::min(best, ray_entry_depth(pose, e, cx, cy));
            body_depth[static_cast<std::size_t>(y) * w + x] = best;
        }
    }

    std::vector<double> zbuf(npix, std::numeric_limits<double>::infinity());
    std::vector<double> theta(npix, 0.0);
    for (std::size_t i = 0; i < model.strands.size(); ++i) {
        for (std::size_t j = 1; j < m; ++j) {
            // Endpoints in a canonical order so a strand and its reverse rasterise identically.
            const auto& p0 = proj[i * m + j - 1];
            const auto& p1 = proj[i * m + j];
            const bool swap = std::tie(p1.px, p1.py, p1.depth) < std::tie(p0.px, p0.py, p0.depth);
            const auto& a = swap ? p1 : p0;
            const auto& b = swap ? p0 : p1;
            const double dx = b.px - a.px, dy = b.py - a.py, dd = b.depth - a.depth;
            // Image y grows downward; orientation is measured with y up.
            const double seg_theta = wrap_pi(std::atan2(-dy, dx));
            const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
            for (int k = 0; k <= steps; ++k) {
                const double t = static_cast<double>(k) / steps;
                const double fx = std::floor(a.px + t * dx);
                const double fy = std::floor(a.py + t * dy);
                if (fx < 0.0 || fy < 0.0 || fx >= w || fy >= h) continue;
                const auto pix = static_cast<std::size_t>(fy) * w + static_cast<std::size_t>(fx);
                const double depth = a.depth + t * dd;
                const bool nearer = depth < zbuf[pix] || (depth == zbuf[pix] && seg_theta < theta[pix]);
                if (nearer && depth < body_depth[pix] + eps) {
                    zbuf[pix] = depth;
                    theta[pix] = seg_theta;
                }
            }
        }
    }

    RenderResult out;
    out.image = OrientationImage(h, w);
    out.depth.assign(npix, std::numeric_limits<float>::infinity());
    out.epsilon = eps;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
    bool any_hair = false;
    for (std::size_t p = 0; p < npix; ++p) {
        const int y = static_cast<int>(p / w), x = static_cast<int>(p % w);
        if (std::isfinite(zbuf[p])) {
            any_hair = true;
            double t = theta[p];
            if (noise_sigma > 0.0) t = wrap_pi(t + noise(rng));
            const auto [c0, c1] = encode_angle(t);
            out.image.at(0, y, x) = c0;
            out.image.at(1, y, x) = c1;
            out.image.at(2, y, x) = OrientationImage::kHair;
            out.depth[p] = static_cast<float>(zbuf[p]);
        } else if (std::isfinite(body_depth[p])) {
            out.image.at(2, y, x) = OrientationImage::kBody;
            out.depth[p] = static_cast<float>(body_depth[p]);
        }
    }
    out.no_hair = !any_hair;

    out.visible.assign(world.size(), 0);
    for (std::size_t k = 0; k < world.size(); ++k) {
        const auto& p = proj[k];
        const double fx = std::floor(p.px), fy = std::floor(p.py);
        if (fx < 0.0 || fy < 0.0 || fx >= w || fy >= h) continue;
        const auto pix = static_cast<std::size_t>(fy) * w + static_cast<std::size_t>(fx);
        const double front = std::min(zbuf[pix], body_depth[pix]);
        out.visible[k] = p.depth <= front + eps ? 1 : 0;
    }
    return out;
}

void save_orientation(const OrientationImage& img, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.magic("ORNT");
    w.u32(kOrntVersion);
    w.u32(static_cast<std::uint32_t>(img.height));
    w.u32(static_cast<std::uint32_t>(img.width));
    w.f32s(img.data);
    w.save(path);
}

OrientationImage load_orientation(const std::filesystem::path& path) {
    auto r = io::ByteReader::open(path);
    r.expect_magic("ORNT");
    if (r.u32() != kOrntVersion) throw FormatError(FormatError::Kind::VersionMismatch, "version mismatch: " + path.string());
    const auto h = r.u32();
    const auto w = r.u32();
    if (3ull * h * w * 4 > r.remaining()) throw FormatError(FormatError::Kind::Truncation, "truncation: " + path.string());
    OrientationImage img(static_cast<int>(h), static_cast<int>(w));
    r.f32s(img.data);
    r.expect_end();
    return img;
}

void save_visibility(std::span<const std::uint8_t> visible, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.magic("VISB");
    std::vector<std::uint8_t> packed((visible.size() + 7) / 8, 0);
    for (std::size_t k = 0; k < visible.size(); ++k) {
        if (visible[k]) packed[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
    }
    w.bytes(packed);
    w.save(path);
}

std::vector<std::uint8_t> load_visibility(const std::filesystem::path& path, std::size_t count) {
    auto r = io::ByteReader::open(path);
    r.expect_magic("VISB");
    const auto packed = r.bytes((count + 7) / 8);
    r.expect_end();
    std::vector<std::uint8_t> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = (packed[k / 8] >> (k % 8)) & 1u;
    return out;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    std::size_t pos = 0;
    auto token = [&]() {
        std::string t;
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) break;
                ++pos;
            } else {
                t += c;
                ++pos;
            }
        }
        return t;
    };
    if (token() != "P5") throw FormatError(FormatError::Kind::BadMagic, "bad magic: " + path.string());
    GrayImage img;
    try {
        img.width = std::stoi(token());
        img.height = std::stoi(token());
        if (std::stoi(token()) != 255) throw FormatError(FormatError::Kind::Invalid, "only 8-bit PGM is supported");
    } catch (const std::logic_error&) {
        throw FormatError(FormatError::Kind::Invalid, "malformed PGM header: " + path.string());
    }
    ++pos;  // single whitespace after maxval
    const auto n = static_cast<std::size_t>(img.width) * img.height;
    if (bytes.size() < pos + n) throw FormatError(FormatError::Kind::Truncation, "truncation: " + path.string());
    img.data.resize(n);
    for (std::size_t k = 0; k < n; ++k) img.data[k] = bytes[pos + k] / 255.0f;
    return img;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    io::ByteWriter w;
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    w.magic(header);
    std::vector<std::uint8_t> px(img.data.size());
    for (std::size_t k = 0; k < px.size(); ++k) {
        px[k] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data[k], 0.0f, 1.0f) * 255.0f));
    }
    w.bytes(px);
    w.save(path);
}

void save_orientation_preview(const OrientationImage& img, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.magic("P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n");
    std::vector<std::uint8_t> px(img.pixels() * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const auto p = static_cast<std::size_t>(y) * img.width + x;
            for (int c = 0; c < 3; ++c) {
                px[p * 3 + c] = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(c, y, x), 0.0f, 1.0f) * 255.0f));
            }
        }
    }
    w.bytes(px);
    w.save(path);
}

}  // namespace hairnet
