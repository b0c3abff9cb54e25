#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hairnet/config.hpp"
#include "hairnet/geometry.hpp"
#include "hairnet/hair.hpp"
#include "hairnet/scalp.hpp"

namespace hairnet {

/// Grid size, sample count and body used by the generator.
struct GeneratorOptions {
    int scalp_res = 32;
    int samples = 100;
    EllipsoidSet body = EllipsoidSet::default_body();
    ScalpOptions scalp;
};

/// Target length band (max arc length, meters) for a length class.
struct LengthBand {
    double lo, hi;
};
LengthBand length_band(LengthClass c);

/// Knobs of the procedural grower. Everything that breaks left/right symmetry is in
/// part_x, sweep and the curl handedness.
struct StyleParams {
    StyleClass style;
    double length = 0.25;        // longest strand, meters
    double length_spread = 0.1;  // strands are shortened by up to this fraction
    double part_x = 0.0;         // x of the parting line on the crown, meters
    double part_strength = 0.8;
    double sweep = 0.0;          // sideways drift, signed
    double bangs = 0.3;          // forward drift of the front rows
    double back_drift = 0.3;
    double lift = 0.25;          // initial rise along the scalp normal
    double gravity = 30.0;       // turning rate toward -y, 1/m
    double curl_amplitude = 0.0; // helix radius, meters (0 for straight)
    double curl_period = 0.06;   // meters of arc per turn
    std::uint64_t jitter_seed = 0;

    /// Randomised parameters for `style`; length is drawn inside the class band.
    static StyleParams random(StyleClass style, std::uint64_t seed);
    /// Centre-parted, no sweep; mirror(grow(p)) == grow(p) for straight styles.
    static StyleParams symmetric(StyleClass style);
};

HairModel grow_style(const StyleParams& params, const GeneratorOptions& opts);
HairModel procedural_style(StyleClass style, std::uint64_t seed, const GeneratorOptions& opts = {});

/// Reflection across the sagittal plane (x -> -x); cell (r, c) takes strand (r, cols-1-c).
HairModel mirror(const HairModel& model);

struct CollisionReport {
    int passes = 0;
    int moved_samples = 0;
    bool converged = true;
};

/// Pushes every non-root sample that lies strictly inside an ellipsoid out along the outward
/// gradient, repeating until no sample is inside (at most 50 passes). Strands that do not move
/// are left bit-identical. `model` must be in the body's frame.
HairModel resolve_collisions(const HairModel& model, const EllipsoidSet& body, CollisionReport* report = nullptr);

struct Clustering {
    std::vector<Polyline> centrals;    // k mean strands, root-local
    std::vector<int> labels;           // per strand
    std::vector<double> objective;     // sum of squared distances after each assignment
    int iterations = 0;
};

/// k-means (k-means++ seeding, at most 100 Lloyd iterations) on strands flattened to M*3 vectors.
Clustering cluster_central_strands(const HairModel& model, int k, std::uint64_t seed);

/// Blend of two same-class parents on the same grid. Bit k of `selection` picks the k-th central
/// strand (indexed by parent A's clusters) from B. 0 and 31 are rejected.
HairModel blend(const HairModel& a, const HairModel& b, unsigned selection, std::uint64_t seed,
                const EllipsoidSet& body = EllipsoidSet::default_body());

/// Pairing of B's clusters with A's that minimises total central-strand distance;
/// result[k] is the B cluster matched to A cluster k.
std::vector<int> match_clusters(const Clustering& a, const Clustering& b);

// ---- corpus ---------------------------------------------------------------------------------

struct DatasetConfig {
    int base_styles = 24;  // classes are cycled in order XS_s, XS_c, S_s, ...
    std::vector<StyleClass> classes = StyleClass::all();
    bool mirror = true;
    int blends_per_pair = 4;
    int max_blend_models = 0;  // 0 = no cap
    int views = 4;
    double noise_sigma = 0.05;        // radians
    double translation_frac = 0.05;   // of the image extent
    double yaw_range = 90.0;          // degrees, symmetric
    double pitch_range = 15.0;
    double roll_range = 15.0;
    double extent = 0.64;             // meters covered by the image width
    int input_res = 256;
    int scalp_res = 32;
    int samples = 100;
    std::uint64_t seed = 1;

    static DatasetConfig from_config(const KeyValueConfig& cfg);
    static const std::set<std::string>& keys();
};

struct DatasetSummary {
    int models = 0;
    int pairs = 0;
    int collision_warnings = 0;
    int empty_views = 0;
};

/// Writes corpus/<model_id>/view<k>.{ornt,hair,vis} and index.txt. Ground truth is stored in
/// the camera frame of each view; the index records the pose.
DatasetSummary build_dataset(const DatasetConfig& config, const std::filesystem::path& out);

/// The source models of a dataset (base styles, mirrors, blends) in corpus order, head frame.
std::vector<std::pair<std::string, HairModel>> dataset_models(const DatasetConfig& config,
                                                              DatasetSummary* summary = nullptr);

}  // namespace hairnet
