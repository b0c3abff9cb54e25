#include "hairnet/geometry.hpp"

#include <numbers>

namespace hairnet {

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
            r(i, j) = s;
        }
    }
    return r;
}

Mat3 Mat3::transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
}

Mat3 Mat3::rotation_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {1, 0, 0, 0, c, -s, 0, s, c};
    return r;
}

Mat3 Mat3::rotation_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
}

Mat3 Mat3::rotation_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
    return r;
}

Pose Pose::from_euler_degrees(double yaw, double pitch, double roll, Vec3 translation) {
    constexpr double deg = std::numbers::pi / 180.0;
    Pose p;
    p.rotation = Mat3::rotation_z(roll * deg) * Mat3::rotation_x(pitch * deg) *
                 Mat3::rotation_y(yaw * deg);
    p.translation = translation;
    return p;
}

bool Pose::is_identity() const {
    return rotation.m == Mat3{}.m && translation == Vec3{};
}

bool EllipsoidSet::valid() const {
    for (const auto& e : items) {
        if (!(e.semi_axes.x > 0.0 && e.semi_axes.y > 0.0 && e.semi_axes.z > 0.0)) return false;
    }
    return true;
}

EllipsoidSet EllipsoidSet::default_body() {
    EllipsoidSet s;
    s.items[0] = {{0.0, 0.0, 0.0}, {0.080, 0.120, 0.100}};      // head
    s.items[1] = {{0.0, -0.150, -0.010}, {0.055, 0.080, 0.055}};  // neck
    s.items[2] = {{0.0, -0.260, -0.015}, {0.200, 0.060, 0.090}};  // shoulders
    s.items[3] = {{0.0, -0.440, -0.015}, {0.170, 0.200, 0.100}};  // torso
    return s;
}

}  // namespace hairnet
