#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace hairnet {

template <typename T>
struct Vec3T {
    T x{}, y{}, z{};

    constexpr Vec3T() = default;
    constexpr Vec3T(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    template <typename U>
    constexpr explicit Vec3T(const Vec3T<U>& o)
        : x(static_cast<T>(o.x)), y(static_cast<T>(o.y)), z(static_cast<T>(o.z)) {}

    constexpr T& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr T operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3T operator+(const Vec3T& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3T operator-(const Vec3T& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3T operator-() const { return {-x, -y, -z}; }
    constexpr Vec3T operator*(T s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3T operator/(T s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3T& operator+=(const Vec3T& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3T& operator-=(const Vec3T& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3T& operator*=(T s) { x *= s; y *= s; z *= s; return *this; }

    constexpr bool operator==(const Vec3T&) const = default;
};

template <typename T>
constexpr Vec3T<T> operator*(T s, const Vec3T<T>& v) { return v * s; }

template <typename T>
constexpr T dot(const Vec3T<T>& a, const Vec3T<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

template <typename T>
constexpr Vec3T<T> cross(const Vec3T<T>& a, const Vec3T<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T>
T norm(const Vec3T<T>& a) { return std::sqrt(dot(a, a)); }

template <typename T>
Vec3T<T> normalized(const Vec3T<T>& a) {
    const T n = norm(a);
    return n > T(0) ? a / n : Vec3T<T>{};
}

using Vec3 = Vec3T<double>;
using Vec3f = Vec3T<float>;

/// Row-major 3x3 rotation.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const;
    Mat3 transposed() const;

    static Mat3 rotation_x(double rad);
    static Mat3 rotation_y(double rad);
    static Mat3 rotation_z(double rad);
};

/// Rigid transform mapping head-frame points into a camera frame: p' = R p + t.
struct Pose {
    Mat3 rotation;
    Vec3 translation;

    /// Yaw about +y, then pitch about +x, then roll about +z (degrees).
    static Pose from_euler_degrees(double yaw, double pitch, double roll, Vec3 translation = {});

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 rotate(const Vec3& v) const { return rotation * v; }
    Vec3 apply_inverse(const Vec3& p) const { return rotation.transposed() * (p - translation); }
    Vec3 rotate_inverse(const Vec3& v) const { return rotation.transposed() * v; }
    bool is_identity() const;
};

/// Axis-aligned ellipsoid used for the body proxy.
struct Ellipsoid {
    Vec3 center;
    Vec3 semi_axes;

    /// 1 at the center, 0 on the surface, negative outside.
    double dist(const Vec3& p) const {
        const double dx = (p.x - center.x) / semi_axes.x;
        const double dy = (p.y - center.y) / semi_axes.y;
        const double dz = (p.z - center.z) / semi_axes.z;
        return 1.0 - dx * dx - dy * dy - dz * dz;
    }

    /// Gradient of the quadratic form sum((p-c)^2/a^2), pointing outward.
    Vec3 outward_gradient(const Vec3& p) const {
        return {2.0 * (p.x - center.x) / (semi_axes.x * semi_axes.x),
                2.0 * (p.y - center.y) / (semi_axes.y * semi_axes.y),
                2.0 * (p.z - center.z) / (semi_axes.z * semi_axes.z)};
    }
};

/// Head, neck, shoulders, torso. Index 0 is always the head.
struct EllipsoidSet {
    std::array<Ellipsoid, 4> items;

    const Ellipsoid& head() const { return items[0]; }
    bool valid() const;

    /// Default body proxy, meters, head ellipsoid 0.24 m tall centred at the origin.
    static EllipsoidSet default_body();
};

}  // namespace hairnet
