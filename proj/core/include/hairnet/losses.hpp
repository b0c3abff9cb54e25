#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hairnet/geometry.hpp"
#include "hairnet/hair.hpp"
#include "hairnet/tensor.hpp"

namespace hairnet {

// ---- network layout ---------------------------------------------------------------------------
// The network emits positions as 3M x H x W (channel 3j+a holds axis a of sample j) and
// curvatures as M x H x W. Strand i lives at cell (i / W, i % W).

template <typename T>
nn::Tensor<T> positions_tensor(const HairModel& model, int height, int width);
template <typename T>
nn::Tensor<T> curvatures_tensor(const HairModel& model, int height, int width);

/// Builds a model on `grid` from network outputs. Sample 0 is pinned to the root and
/// curvatures are clamped at zero so the result satisfies the Strand invariants.
HairModel model_from_network(const nn::Tensor<float>& positions, const nn::Tensor<float>& curvatures,
                             const ScalpGrid& grid);

/// Root-local samples of strand i read straight from a position tensor (no pinning).
std::vector<Vec3> network_strand(const nn::Tensor<float>& positions, int strand);

// ---- visibility weights -----------------------------------------------------------------------

struct VisibilityWeights {
    static constexpr double kVisible = 10.0;
    static constexpr double kInvisible = 0.1;

    /// Laid out M x H x W like the curvature tensor. `uniform` gives the all-ones ablation.
    template <typename T>
    static nn::Tensor<T> tensor(std::span<const std::uint8_t> visible, int samples, int height, int width,
                                bool uniform = false);
};

// ---- plain evaluation -------------------------------------------------------------------------

/// Mean over N*M of w * |p - p*|^2. All three tensors use the network layout.
template <typename T>
double pos_loss_value(const nn::Tensor<T>& pred, const nn::Tensor<T>& gt, const nn::Tensor<T>& weights);

template <typename T>
double curv_loss_value(const nn::Tensor<T>& pred, const nn::Tensor<T>& gt, const nn::Tensor<T>& weights);

/// 1 at the centre, 0 on the surface, negative outside.
inline double ellipsoid_dist(const Vec3& p, const Ellipsoid& e) { return e.dist(p); }

/// Collision penalty over strands of `samples` points each. Points are world coordinates in
/// the body's (head) frame, strand-major. Segment length is the L1 norm unless `euclidean`.
double collision_value(std::span<const Vec3> points, int samples, const EllipsoidSet& body, bool euclidean = false);

/// Head-frame points for camera-frame roots plus root-local offsets seen under `pose`.
std::vector<Vec3> head_frame_points(std::span<const Vec3> roots_cam, std::span<const Vec3> locals, int samples,
                                    const Pose& pose);

/// Collision penalty of a camera-frame model; the pose maps it back onto the body.
double collision_value(const HairModel& model, const EllipsoidSet& body, const Pose& pose = {},
                       bool euclidean = false);

// ---- differentiable losses --------------------------------------------------------------------

template <typename T>
nn::Var<T> loss_pos(const nn::Var<T>& pred, const nn::Tensor<T>& gt, const nn::Tensor<T>& weights);

template <typename T>
nn::Var<T> loss_curv(const nn::Var<T>& pred, const nn::Tensor<T>& gt, const nn::Tensor<T>& weights);

/// Everything the collision term needs besides the predicted offsets.
struct CollisionContext {
    std::vector<Vec3> roots;  // camera frame, one per cell
    Pose pose;                // head -> camera
    EllipsoidSet body = EllipsoidSet::default_body();
    bool euclidean = false;
};

template <typename T>
nn::Var<T> loss_collision(const nn::Var<T>& pred, const CollisionContext& ctx);

struct LossOptions {
    double lambda_curv = 1.0;
    double lambda_col = 1e-4;
    bool no_vaw = false;
    bool no_collision = false;
    bool no_curvature = false;
    bool euclidean_collision = false;
};

template <typename T>
struct LossTargets {
    nn::Tensor<T> positions;
    nn::Tensor<T> curvatures;
    nn::Tensor<T> weights;  // already all-ones when the VAW ablation is active
    CollisionContext collision;
};

struct LossComponents {
    double pos = 0.0;
    double curv = 0.0;
    double col = 0.0;
    double total = 0.0;
};

template <typename T>
struct LossResult {
    nn::Var<T> total;
    LossComponents values;  // every component is reported, even the ablated ones
};

/// L = L_pos + lambda_curv L_curv + lambda_col L_col with the ablated terms dropped.
template <typename T>
LossResult<T> loss_total(const nn::Var<T>& positions, const nn::Var<T>& curvatures, const LossTargets<T>& targets,
                         const LossOptions& opts);

double combine(const LossComponents& c, const LossOptions& opts);

}  // namespace hairnet
