#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace vxp {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline bool is_finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

/// Returns the zero vector for (near-)zero input; callers that need a strict
/// direction check the norm themselves.
inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec3{};
}

/// Unit quaternion, scalar first (w, x, y, z).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static constexpr Quat identity() { return {}; }

  static Quat from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 a = vxp::normalized(axis);
    const double s = std::sin(angle / 2.0);
    return {std::cos(angle / 2.0), a.x * s, a.y * s, a.z * s};
  }

  constexpr Quat operator*(const Quat& q) const {
    return {w * q.w - x * q.x - y * q.y - z * q.z, w * q.x + x * q.w + y * q.z - z * q.y,
            w * q.y - x * q.z + y * q.w + z * q.x, w * q.z + x * q.y - y * q.x + z * q.w};
  }
  constexpr Quat conjugate() const { return {w, -x, -y, -z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const {
    const double n = norm();
    return n > 0.0 ? Quat{w / n, x / n, y / n, z / n} : identity();
  }
  constexpr bool operator==(const Quat&) const = default;

  Vec3 rotate(const Vec3& v) const {
    const Vec3 u{x, y, z};
    const Vec3 t = 2.0 * cross(u, v);
    return v + w * t + cross(u, t);
  }
};

constexpr double quat_dot(const Quat& a, const Quat& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }

/// Geodesic angle between two orientations, in [0, pi].
inline double angle_between(const Quat& a, const Quat& b) {
  const double d = std::clamp(std::abs(quat_dot(a, b)), 0.0, 1.0);
  return 2.0 * std::acos(d);
}

inline Quat slerp(const Quat& a, Quat b, double t) {
  double d = quat_dot(a, b);
  if (d < 0.0) {
    b = {-b.w, -b.x, -b.y, -b.z};
    d = -d;
  }
  if (d > 0.9995) {
    return Quat{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)}
        .normalized();
  }
  const double theta = std::acos(d);
  const double s = std::sin(theta);
  const double wa = std::sin((1.0 - t) * theta) / s;
  const double wb = std::sin(t * theta) / s;
  return Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z}.normalized();
}

/// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
inline Quat rotation_between(const Vec3& from, const Vec3& to) {
  const Vec3 f = normalized(from);
  const Vec3 t = normalized(to);
  const double d = dot(f, t);
  if (d < -1.0 + 1e-12) {
    // Antiparallel: any axis orthogonal to `from`. Prefer x so that the
    // canonical down-pointing tool flips about x.
    Vec3 axis = Vec3{1, 0, 0} - f * f.x;
    if (norm(axis) < 1e-9) axis = Vec3{0, 1, 0} - f * f.y;
    return Quat::from_axis_angle(axis, std::numbers::pi);
  }
  const Vec3 c = cross(f, t);
  return Quat{1.0 + d, c.x, c.y, c.z}.normalized();
}

}  // namespace vxp
