#pragma once

#include "hairnet/geometry.hpp"
#include "hairnet/hair.hpp"

namespace hairnet {

/// Hairline as polar angle from the crown (degrees) at the front, sides and back.
struct ScalpOptions {
    double front_polar_deg = 60.0;
    double side_polar_deg = 85.0;   // above the ears
    double back_polar_deg = 105.0;  // 15 degrees below the equator
};

struct ScalpPoint {
    Vec3 position;
    Vec3 normal;
};

/// Maps (u, v) in [0,1]^2 onto the scalp cap of the head ellipsoid.
/// u runs across the head (x), v from back to front. u -> 1-u mirrors x.
ScalpPoint scalp_point(double u, double v, const Ellipsoid& head, const ScalpOptions& opts = {});

/// Roots at the cell centres ((c+0.5)/cols, (r+0.5)/rows).
ScalpGrid make_scalp_grid(int rows, int cols, const Ellipsoid& head, const ScalpOptions& opts = {});

}  // namespace hairnet
