#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hairnet/geometry.hpp"

namespace hairnet {

using Polyline = std::vector<Vec3>;

enum class LengthClass : std::uint8_t { XS, S, M, L, XL, XXL };

/// One of the 12 style labels: length band x {straight, curly}.
struct StyleClass {
    LengthClass length = LengthClass::M;
    bool curly = false;

    std::string name() const;  // e.g. "M_c"
    static StyleClass parse(const std::string& name);
    static std::vector<StyleClass> all();

    bool operator==(const StyleClass&) const = default;
};

/// M samples in the root-local frame plus per-sample curvature (1/m).
struct Strand {
    std::vector<Vec3f> samples;
    std::vector<float> curvatures;

    bool operator==(const Strand&) const = default;
};

/// Fixed cell -> root map over the scalp. N = rows * cols, row-major.
struct ScalpGrid {
    int rows = 0;
    int cols = 0;
    std::vector<Vec3f> roots;
    std::vector<Vec3f> normals;

    int size() const { return rows * cols; }
    int index(int r, int c) const { return r * cols + c; }

    bool operator==(const ScalpGrid&) const = default;
};

struct HairModel {
    ScalpGrid grid;
    std::vector<Strand> strands;
    std::vector<StyleClass> class_tags;

    int strand_count() const { return static_cast<int>(strands.size()); }
    int samples_per_strand() const { return strands.empty() ? 0 : static_cast<int>(strands.front().samples.size()); }

    /// Throws std::invalid_argument when a structural invariant is broken.
    void validate() const;
};

/// Bit-exact comparison of grid and strands; class tags are not persisted and are ignored.
bool geometry_equal(const HairModel& a, const HairModel& b);

/// World-frame points, strand-major (index i*M + j). Sums are exact in double.
std::vector<Vec3> to_world(const HairModel& model);

/// Inverse of to_world against the roots (and curvatures) of `reference`.
HairModel to_local(std::span<const Vec3> world, const HairModel& reference);

/// Root-local strand samples as a double polyline.
Polyline strand_polyline(const Strand& strand);

/// Menger curvature of consecutive triples; endpoints copy their neighbour.
std::vector<double> discrete_curvature(std::span<const Vec3> points);

double arc_length(std::span<const Vec3> points);

/// Equal arc-length resampling. Throws std::invalid_argument("degenerate strand") for zero length.
Polyline resample(std::span<const Vec3> polyline, int count);

/// Replaces the strand's samples (root pinned to the origin) and recomputes curvature.
void assign_strand(Strand& strand, std::span<const Vec3> local);

void recompute_curvatures(HairModel& model);

/// Applies a rigid transform: roots move, normals and local offsets rotate.
HairModel transformed(const HairModel& model, const Pose& pose);

/// `.hair` binary persistence (little-endian). Throws FormatError.
void save_hair(const HairModel& model, const std::filesystem::path& path);
HairModel load_hair(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_hair(const HairModel& model);
HairModel decode_hair(std::vector<std::uint8_t> bytes, const std::string& label = {});

/// Each strand as one `l` polyline in world coordinates.
void write_obj(const HairModel& model, const std::filesystem::path& path);

}  // namespace hairnet
