#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "hairnet/geometry.hpp"
#include "hairnet/hair.hpp"

namespace hairnet {

/// 3 x H x W network input, channel-major.
/// Channels 0/1 hold (cos 2θ + 1)/2 and (sin 2θ + 1)/2 on hair pixels and 0 elsewhere;
/// channel 2 holds the label (0 background, 0.5 body, 1 hair).
struct OrientationImage {
    static constexpr float kBackground = 0.0f;
    static constexpr float kBody = 0.5f;
    static constexpr float kHair = 1.0f;

    int height = 0;
    int width = 0;
    std::vector<float> data;

    OrientationImage() = default;
    OrientationImage(int h, int w) : height(h), width(w), data(3ull * h * w, 0.0f) {}

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    float& at(int c, int y, int x) { return data[c * pixels() + static_cast<std::size_t>(y) * width + x]; }
    float at(int c, int y, int x) const { return data[c * pixels() + static_cast<std::size_t>(y) * width + x]; }
    bool is_hair(int y, int x) const { return at(2, y, x) == kHair; }

    bool operator==(const OrientationImage&) const = default;
};

/// Double-angle encoding of an undirected angle.
std::pair<float, float> encode_angle(double theta);
/// Inverse of encode_angle; result in [0, π).
double decode_angle(float c0, float c1);

/// Orthographic camera looking down -z of its own frame.
struct Camera {
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    Vec3 translation;
    double scale = 0.01;  // meters per pixel
    int width = 256;
    int height = 256;

    Pose pose() const { return Pose::from_euler_degrees(yaw_deg, pitch_deg, roll_deg, translation); }

    /// Continuous pixel coordinates (x right, y down) and depth (smaller is nearer).
    struct Projected {
        double px, py, depth;
    };
    Projected project_camera_point(const Vec3& p_cam) const {
        return {p_cam.x / scale + 0.5 * width, 0.5 * height - p_cam.y / scale, -p_cam.z};
    }
};

struct RenderResult {
    OrientationImage image;
    std::vector<float> depth;           // H*W z-buffer (hair over body), +inf where empty
    std::vector<std::uint8_t> visible;  // N*M, strand-major
    double epsilon = 0.0;               // depth tolerance used for visibility
    bool no_hair = false;               // model entirely outside the viewport
};

/// Rasterises a head-frame model seen through `cam`. Strand segments are 1 px lines with a z-buffer;
/// the body label comes from ray-casting the ellipsoids. Orientation noise is N(0, noise_sigma^2)
/// per hair pixel, drawn from `seed`.
RenderResult render_orientation(const HairModel& model, const EllipsoidSet& body, const Camera& cam,
                                double noise_sigma, std::uint64_t seed);

/// Per-sample visibility weights helper: count of set bits.
std::size_t count_visible(std::span<const std::uint8_t> visible);

// ---- Gabor orientation estimation -------------------------------------------------------------

struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<float> data;
    float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct GaborParams {
    int orientations = 32;
    double wavelength = 4.0;  // pixels
    double sigma = 2.0;       // pixels
    double gamma = 0.75;

    /// Reference values at 256 px, scaled with the resolution and floored so that small
    /// images still resolve a stripe.
    static GaborParams for_resolution(int res);
};

struct OrientationField {
    int height = 0;
    int width = 0;
    std::vector<float> theta;       // radians in [0, π)
    std::vector<float> confidence;  // max response - mean response; 0 off the mask
};

OrientationField gabor_orientation(const GrayImage& image, std::span<const std::uint8_t> hair_mask,
                                   const GaborParams& params);

/// Builds the network input from a grey image and a label map (255 hair, 128 body, 0 background).
OrientationImage orientation_from_photo(const GrayImage& image, std::span<const std::uint8_t> labels,
                                        const GaborParams& params);

// ---- persistence ------------------------------------------------------------------------------

void save_orientation(const OrientationImage& img, const std::filesystem::path& path);
OrientationImage load_orientation(const std::filesystem::path& path);

/// "VISB" followed by N*M bits, LSB first, padded to whole bytes.
void save_visibility(std::span<const std::uint8_t> visible, const std::filesystem::path& path);
std::vector<std::uint8_t> load_visibility(const std::filesystem::path& path, std::size_t count);

/// 8-bit binary PGM (P5).
GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Lossy RGB preview of an orientation image (binary PPM); never read back.
void save_orientation_preview(const OrientationImage& img, const std::filesystem::path& path);

}  // namespace hairnet
