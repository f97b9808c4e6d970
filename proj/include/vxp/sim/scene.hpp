#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "vxp/common/error.hpp"
#include "vxp/common/geometry.hpp"

namespace vxp::sim {

enum class JointType { rigid, prismatic, revolute_latched };

/// Articulation state. Prismatic joints slide the whole object along `axis`
/// by `q`. A latched revolute joint swings about a vertical hinge at
/// `hinge` by `q` radians, but only after its handle joint (press angle)
/// has crossed `latch_threshold` while grasped.
struct Joint {
  JointType type = JointType::rigid;
  Vec3 axis{};
  double lo = 0.0, hi = 0.0;
  double q = 0.0;
  double q_initial = 0.0;

  Vec3 hinge{};
  double handle = 0.0;
  double handle_max = 0.6;
  double latch_threshold = 0.4;
  double lever = 0.1;
  bool unlatched = false;

  bool operator==(const Joint&) const = default;
};

/// A named subset of an object's points, addressable as "<object> <part>".
struct Part {
  std::string name;
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  bool operator==(const Part&) const = default;
};

struct SceneObject {
  std::string name;
  std::string category;
  Vec3 position{};
  Quat rotation{};
  /// Collision box half sizes about `position` (axis aligned).
  Vec3 half_extents{};
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<Part> parts;
  Joint joint;
  bool interactable = true;
  bool graspable = false;
  bool pushable = false;

  bool operator==(const SceneObject&) const = default;

  bool articulated() const { return joint.type != JointType::rigid; }
  const Part* part(std::string_view n) const {
    for (const auto& p : parts)
      if (p.name == n) return &p;
    return nullptr;
  }
};

inline Vec3 rotate_z(const Vec3& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

/// Maps an object-frame point to the world under the current joint state.
/// `is_handle` applies the handle press offset for latched joints.
inline Vec3 to_world(const SceneObject& o, const Vec3& p, bool is_handle = false) {
  Vec3 w = o.position + o.rotation.rotate(p);
  switch (o.joint.type) {
    case JointType::rigid:
      return w;
    case JointType::prismatic:
      return w + o.joint.axis * o.joint.q;
    case JointType::revolute_latched: {
      if (is_handle) w.z -= o.joint.lever * std::sin(o.joint.handle);
      // Opening swings the free edge toward -y (clockwise seen from above).
      return o.joint.hinge + rotate_z(w - o.joint.hinge, -o.joint.q);
    }
  }
  return w;
}

inline Vec3 normal_to_world(const SceneObject& o, const Vec3& n) {
  Vec3 w = o.rotation.rotate(n);
  if (o.joint.type == JointType::revolute_latched) w = rotate_z(w, -o.joint.q);
  return w;
}

inline std::vector<Vec3> world_points(const SceneObject& o) {
  std::vector<Vec3> out;
  out.reserve(o.points.size());
  for (const auto& p : o.points) out.push_back(to_world(o, p));
  return out;
}

inline std::vector<Vec3> world_points(const SceneObject& o, const Part& part) {
  const bool handle = part.name == "handle";
  std::vector<Vec3> out;
  out.reserve(part.points.size());
  for (const auto& p : part.points) out.push_back(to_world(o, p, handle));
  return out;
}

/// World-frame center of the collision box.
inline Vec3 box_center(const SceneObject& o) { return to_world(o, {0, 0, 0}); }

struct Aabb {
  Vec3 lo, hi;
  bool operator==(const Aabb&) const = default;
  bool contains(const Vec3& p, double margin = 0.0) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < lo[a] - margin || p[a] > hi[a] + margin) return false;
    return true;
  }
  bool overlaps(const Aabb& o, double margin = 0.0) const {
    for (int a = 0; a < 3; ++a)
      if (hi[a] + margin <= o.lo[a] || o.hi[a] + margin <= lo[a]) return false;
    return true;
  }
};

inline Aabb box_of(const SceneObject& o) {
  const Vec3 c = box_center(o);
  return {c - o.half_extents, c + o.half_extents};
}

/// Distance from a point to a box (zero inside).
inline double distance_to_box(const Vec3& p, const Aabb& b) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = std::max({b.lo[a] - p[a], 0.0, p[a] - b.hi[a]});
    s += d * d;
  }
  return std::sqrt(s);
}

namespace detail {

/// Surface samples of an axis-aligned box centred at `c` (object frame),
/// with outward normals. `faces` masks -x,+x,-y,+y,-z,+z.
inline void add_box_surface(std::vector<Vec3>& pts, std::vector<Vec3>& nrm, const Vec3& c, const Vec3& h,
                            double spacing, unsigned faces = 0x3f) {
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    const int nu = std::max(1, static_cast<int>(std::lround(2 * h[u] / spacing)));
    const int nv = std::max(1, static_cast<int>(std::lround(2 * h[v] / spacing)));
    for (int side = 0; side < 2; ++side) {
      if (!(faces & (1u << (axis * 2 + side)))) continue;
      Vec3 n{};
      n[axis] = side ? 1.0 : -1.0;
      for (int i = 0; i <= nu; ++i)
        for (int j = 0; j <= nv; ++j) {
          Vec3 p = c;
          p[axis] += n[axis] * h[axis];
          p[u] += -h[u] + 2 * h[u] * i / nu;
          p[v] += -h[v] + 2 * h[v] * j / nv;
          pts.push_back(p);
          nrm.push_back(n);
        }
    }
  }
}

}  // namespace detail

inline constexpr double kBlockHalf = 0.025;

/// A pushable, graspable box resting on the table at (x, y).
inline SceneObject make_box(std::string name, std::string category, double x, double y, Vec3 half) {
  SceneObject o;
  o.name = std::move(name);
  o.category = std::move(category);
  o.position = {x, y, half.z};
  o.half_extents = half;
  detail::add_box_surface(o.points, o.normals, {0, 0, 0}, half, 0.005);
  o.graspable = true;
  o.pushable = true;
  return o;
}

inline SceneObject make_block(std::string color, double x, double y) {
  return make_box(color + " block", "block", x, y, {kBlockHalf, kBlockHalf, kBlockHalf});
}

/// A flat 30 cm line painted on the table, centred at (x, y) and oriented
/// by `yaw`. Lines are landmarks only.
inline SceneObject make_line(std::string color, double x, double y, double yaw) {
  SceneObject o;
  o.name = color + " line";
  o.category = "line";
  o.position = {x, y, 0.001};
  o.rotation = Quat::from_axis_angle({0, 0, 1}, yaw);
  o.half_extents = {0.15, 0.005, 0.001};
  for (int i = 0; i <= 60; ++i)
    for (int j = -1; j <= 1; ++j) {
      o.points.push_back({-0.15 + 0.005 * i, 0.004 * j, 0.0});
      o.normals.push_back({0, 0, 1});
    }
  o.interactable = false;
  return o;
}

inline Vec3 line_endpoint(const SceneObject& line, int which) {
  return to_world(line, {which ? 0.15 : -0.15, 0.0, 0.0});
}

struct CabinetLayout {
  double x0 = 0.35, x1 = 0.65;
  double front = 0.75, back = 0.95;
  double height = 0.45;
  double handle_depth = 0.02;
  double travel = 0.2;
  struct Slot {
    const char* name;
    double z0, z1;
  };
  Slot slots[3] = {{"top", 0.30, 0.42}, {"middle", 0.17, 0.29}, {"bottom", 0.04, 0.16}};
};

/// Cabinet body plus three prismatic drawers opening toward -y.
inline std::vector<SceneObject> make_cabinet(const std::array<double, 3>& openings, const CabinetLayout& L = {}) {
  std::vector<SceneObject> out;
  SceneObject body;
  body.name = "cabinet";
  body.category = "cabinet";
  body.position = {(L.x0 + L.x1) / 2, (L.front + L.back) / 2, L.height / 2};
  body.half_extents = {(L.x1 - L.x0) / 2, (L.back - L.front) / 2, L.height / 2};
  detail::add_box_surface(body.points, body.normals, {0, 0, 0}, body.half_extents, 0.02, 0x3e);
  body.interactable = false;
  out.push_back(body);

  for (int i = 0; i < 3; ++i) {
    const auto& s = L.slots[i];
    SceneObject d;
    d.name = std::string(s.name) + " drawer";
    d.category = "drawer";
    // Collision box: the drawer front slab; position is its closed centre.
    d.position = {(L.x0 + L.x1) / 2, L.front - 0.005, (s.z0 + s.z1) / 2};
    d.half_extents = {(L.x1 - L.x0) / 2 - 0.01, 0.005, (s.z1 - s.z0) / 2};
    detail::add_box_surface(d.points, d.normals, {0, 0, 0}, d.half_extents, 0.01, 0x04);
    Part handle;
    handle.name = "handle";
    const Vec3 hc{0.0, -0.005 - L.handle_depth, 0.0};
    detail::add_box_surface(handle.points, handle.normals, hc, {0.05, 0.002, 0.005}, 0.005, 0x34);
    d.points.insert(d.points.end(), handle.points.begin(), handle.points.end());
    d.normals.insert(d.normals.end(), handle.normals.begin(), handle.normals.end());
    d.parts.push_back(handle);
    d.joint.type = JointType::prismatic;
    d.joint.axis = {0, -1, 0};
    d.joint.lo = 0.0;
    d.joint.hi = L.travel;
    d.joint.q = d.joint.q_initial = std::clamp(openings[i], 0.0, L.travel);
    d.graspable = true;
    out.push_back(d);
  }
  return out;
}

struct DoorLayout {
  Vec3 hinge{0.30, 0.70, 0.0};
  double width = 0.25;
  double height = 0.40;
  double bottom = 0.05;
  double handle_inset = 0.03;
  double handle_height = 0.25;
  double handle_protrusion = 0.03;
  double max_angle = 1.2;
};

/// Hinged door in the plane y = hinge.y whose handle must be pressed down
/// past the latch angle before the door swings.
inline SceneObject make_door(const DoorLayout& L = {}) {
  SceneObject d;
  d.name = "door";
  d.category = "door";
  d.position = {L.hinge.x + L.width / 2, L.hinge.y, L.bottom + L.height / 2};
  d.half_extents = {L.width / 2, 0.01, L.height / 2};
  detail::add_box_surface(d.points, d.normals, {0, 0, 0}, d.half_extents, 0.02, 0x04);
  Part handle;
  handle.name = "handle";
  const Vec3 hc{L.width / 2 - L.handle_inset, -0.01 - L.handle_protrusion, L.handle_height - d.position.z};
  detail::add_box_surface(handle.points, handle.normals, hc, {0.01, 0.003, 0.003}, 0.003, 0x34);
  d.points.insert(d.points.end(), handle.points.begin(), handle.points.end());
  d.normals.insert(d.normals.end(), handle.normals.begin(), handle.normals.end());
  d.parts.push_back(handle);
  d.joint.type = JointType::revolute_latched;
  d.joint.hinge = L.hinge;
  d.joint.lo = 0.0;
  d.joint.hi = L.max_angle;
  d.graspable = true;
  return d;
}

/// Real-world style props. Shapes are approximated by their bounding box.
inline SceneObject make_item(const std::string& name, double x, double y) {
  struct Dims {
    const char* name;
    Vec3 half;
  };
  static const Dims table[] = {
      {"apple", {0.04, 0.04, 0.04}},       {"banana", {0.09, 0.02, 0.02}}, {"yellow bowl", {0.08, 0.08, 0.025}},
      {"headphones", {0.09, 0.04, 0.03}}, {"mug", {0.045, 0.045, 0.05}}, {"wood block", {0.03, 0.03, 0.03}},
  };
  for (const auto& d : table)
    if (name == d.name) return make_box(name, "item", x, y, d.half);
  fail(ErrorKind::invalid_input, "unknown item '" + name + "'");
}

}  // namespace vxp::sim
