#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hairnet/geometry.hpp"
#include "hairnet/hair.hpp"
#include "hairnet/model.hpp"
#include "hairnet/scalp.hpp"

namespace hairnet {

/// Gaussian filter along the sample index, truncated at 3 sigma. Past either end the strand is
/// extended by point reflection through the end sample, so straight strands come out unchanged.
/// Sample 0 stays at the origin.
Polyline smooth(std::span<const Vec3> positions, double sigma = 1.5);

struct CurlOptions {
    double threshold_scale = 0.1;  // tau = threshold_scale * mean |predicted curvature|
    int bisection_steps = 30;
    double omega_factor = 4.0;     // helix frequency = omega_factor * target curvature
    int min_samples_per_turn = 6;
};

struct CurlReport {
    bool applied = false;
    double target = 0.0;    // mean predicted curvature over interior samples
    double achieved = 0.0;  // mean discrete curvature of the output over interior samples
    double amplitude = 0.0;
    double omega = 0.0;
};

/// Mean discrete curvature over the interior samples 1..M-2.
double mean_interior_curvature(std::span<const Vec3> points);

/// Adds a helical offset A(s) (n sin ws + b cos ws) around the strand when the predicted
/// curvature disagrees with the strand's own by more than tau. A ramps up from 0 at the root
/// and is fitted by bisection so the mean discrete curvature meets the predicted mean.
Polyline resynthesize_curliness(std::span<const Vec3> strand, std::span<const double> predicted_curvature,
                                const CurlOptions& opts = {}, CurlReport* report = nullptr);

/// Smoothing followed by curliness re-synthesis on every strand; curvature is recomputed.
HairModel refine(const HairModel& model, const CurlOptions& opts = {});

/// Grid of the network's scalp cells, optionally posed into a camera frame.
ScalpGrid network_grid(const ScaleProfile& profile, const Pose& pose = {},
                       const EllipsoidSet& body = EllipsoidSet::default_body());

/// Bilinear sample (align_corners = false, clamped) of a C x R x R feature grid at scalp
/// coordinates (u, v); returns C x 1 x P.
nn::Tensor<float> sample_features(const nn::Tensor<float>& features, std::span<const std::pair<double, double>> uv);

/// rows x cols with rows * cols = n and rows as close to sqrt(n) as possible.
std::pair<int, int> lattice_shape(int n);

struct UpsampleOptions {
    int target_strands = 9000;
    std::uint64_t seed = 1;
    bool jitter = true;  // jittered stratified (u, v); false puts samples at cell centres
    Pose pose;
    EllipsoidSet body = EllipsoidSet::default_body();
    ScalpOptions scalp;
};

/// Decodes target_strands strands from interpolated strand features. Roots come from the scalp
/// map at the sampled (u, v).
HairModel upsample(const HairNetParams<float>& params, const nn::Tensor<float>& features, const UpsampleOptions& opts);

/// (1 - t) z_a + t z_b decoded on the network grid.
HairModel latent_interpolate(const HairNetParams<float>& params, const nn::Tensor<float>& z_a,
                             const nn::Tensor<float>& z_b, double t, const Pose& pose = {});

/// Network outputs as a model on the network grid.
HairModel prediction_model(const Prediction& prediction, const ScaleProfile& profile, const Pose& pose = {});

}  // namespace hairnet
