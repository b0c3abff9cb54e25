#include "hairnet/scalp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hairnet {

namespace {

// s across the head (x), t from back (-1) to front (+1), both in [-1, 1].
ScalpPoint scalp_point_st(double s, double t, const Ellipsoid& head, const ScalpOptions& opts) {
    constexpr double deg = std::numbers::pi / 180.0;
    // Elliptical square-to-disk map keeps the cell layout mirror symmetric in s.
    const double dx = s * std::sqrt(1.0 - 0.5 * t * t);
    const double dz = t * std::sqrt(1.0 - 0.5 * s * s);
    const double rho = std::sqrt(dx * dx + dz * dz);
    const double phi = std::atan2(dx, dz);  // 0 at the face, +-pi at the back

    // theta_max(phi) = a + b cos(phi) + c cos(2 phi) through the three hairline angles.
    const double b = 0.5 * (opts.front_polar_deg - opts.back_polar_deg);
    const double a_plus_c = 0.5 * (opts.front_polar_deg + opts.back_polar_deg);
    const double a = 0.5 * (a_plus_c + opts.side_polar_deg);
    const double c = a_plus_c - a;
    const double theta_max = a + b * std::cos(phi) + c * std::cos(2.0 * phi);
    const double theta = rho * theta_max * deg;

    const Vec3 dir{std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi)};
    const Vec3& ax = head.semi_axes;
    ScalpPoint p;
    p.position = head.center + Vec3{ax.x * dir.x, ax.y * dir.y, ax.z * dir.z};
    p.normal = normalized(Vec3{dir.x / ax.x, dir.y / ax.y, dir.z / ax.z});
    return p;
}

}  // namespace

ScalpPoint scalp_point(double u, double v, const Ellipsoid& head, const ScalpOptions& opts) {
    return scalp_point_st(2.0 * u - 1.0, 2.0 * v - 1.0, head, opts);
}

ScalpGrid make_scalp_grid(int rows, int cols, const Ellipsoid& head, const ScalpOptions& opts) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("scalp grid needs positive resolution");
    ScalpGrid g;
    g.rows = rows;
    g.cols = cols;
    g.roots.reserve(static_cast<std::size_t>(rows) * cols);
    g.normals.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        // Integer numerators keep s exactly antisymmetric under c -> cols-1-c.
        const double t = static_cast<double>(2 * r + 1 - rows) / rows;
        for (int c = 0; c < cols; ++c) {
            const double s = static_cast<double>(2 * c + 1 - cols) / cols;
            const auto p = scalp_point_st(s, t, head, opts);
            g.roots.emplace_back(p.position);
            g.normals.emplace_back(p.normal);
        }
    }
    return g;
}

}  // namespace hairnet
