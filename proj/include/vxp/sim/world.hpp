#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "vxp/sim/scene.hpp"
#include "vxp/voxel/grid.hpp"

namespace vxp::sim {

inline constexpr double kVmax = 0.05;         // m per tick at velocity scale 1
inline constexpr double kTickSeconds = 0.05;  // 20 Hz
inline constexpr double kGraspReach = 0.015;
inline constexpr double kContactMargin = 0.005;
inline constexpr double kForceCap = 0.05;
inline const Vec3 kRestPosition{0.5, 0.5, 0.35};

struct Waypoint {
  Vec3 position{};
  Quat rotation{};
  double velocity_scale = 1.0;
  int gripper = 0;

  bool operator==(const Waypoint&) const = default;
};

struct DetectionRecord {
  std::string name;
  Vec3 center{};
  /// Sorted, unique linear voxel indices covered by the object's points.
  std::vector<std::size_t> occupancy;
  Vec3 normal{0, 0, 1};
  Aabb box{};
};

enum class DisturbanceKind { robot_force, object_displacement, progress_reversal };

inline std::string_view to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::robot_force: return "robot_force";
    case DisturbanceKind::object_displacement: return "object_displacement";
    case DisturbanceKind::progress_reversal: return "progress_reversal";
  }
  return "?";
}

struct DisturbanceEvent {
  DisturbanceKind kind = DisturbanceKind::robot_force;
  long schedule = 0;
  std::string target;
  /// Force integral (robot_force) or new position (object_displacement).
  Vec3 vector{};
  /// When set, the event waits past `schedule` until the target joint
  /// drops to this value; `schedule` is then overwritten with the firing tick.
  std::optional<double> joint_trigger;

  bool operator==(const DisturbanceEvent&) const = default;
};

struct Grasp {
  int object = -1;
  bool handle = false;
  Vec3 offset{};  // object position in the ee frame
  Quat relative{};
  Vec3 ee_at_grasp{};
  double q_at_grasp = 0.0;

  bool operator==(const Grasp&) const = default;
};

struct Flags {
  int clamped = 0;
  int contact_miss = 0;
  int collision = 0;
  int rejected = 0;

  bool operator==(const Flags&) const = default;
};

/// Running task statistics, configured at reset and updated every tick.
struct Monitor {
  std::string clearance_object;
  bool clearance_to_surface = false;
  double min_clearance = 1e9;

  std::string tracked_object;
  std::string obstacle_object;
  double min_obstacle_clearance = 1e9;

  enum class SpeedRegion { none, box, ball, everywhere };
  SpeedRegion speed_region = SpeedRegion::none;
  Aabb speed_box{};
  std::string speed_object;
  double speed_radius = 0.0;
  double speed_scale = 1.0;
  int speed_ticks = 0;
  int speed_violations = 0;

  int side_axis = -1;
  double side_sign = 1.0;
  std::string side_object;
  bool side_violated = false;

  bool track_line = false;
  Vec3 line_a{}, line_b{};
  double max_line_deviation = 0.0;

  bool track_region = false;
  Aabb region{};
  bool left_region = false;
  Vec3 start{};

  bool operator==(const Monitor&) const = default;
};

struct TickRecord {
  long tick = 0;
  Vec3 ee{};
  int gripper = 0;
  std::vector<double> joints;
  std::string event;
};

struct WorldState {
  GridSpec spec;
  std::vector<SceneObject> objects;
  Vec3 ee_position = kRestPosition;
  Quat ee_rotation{};
  int gripper = 0;
  long tick = 0;
  std::mt19937_64 rng{0};
  std::optional<Grasp> grasp;
  Flags flags;
  Monitor monitor;
  std::vector<DisturbanceEvent> pending;
  std::vector<DisturbanceEvent> fired;
  bool record_history = false;
  std::vector<TickRecord> history;

  bool operator==(const WorldState& o) const {
    return spec == o.spec && objects == o.objects && ee_position == o.ee_position && ee_rotation == o.ee_rotation &&
           gripper == o.gripper && tick == o.tick && rng == o.rng && grasp == o.grasp && flags == o.flags &&
           monitor == o.monitor && pending == o.pending && fired == o.fired;
  }

  int find(std::string_view name) const {
    for (std::size_t i = 0; i < objects.size(); ++i)
      if (objects[i].name == name) return static_cast<int>(i);
    return -1;
  }
  SceneObject& object(std::string_view name) {
    const int i = find(name);
    if (i < 0) fail(ErrorKind::invalid_input, "no object named '" + std::string(name) + "'");
    return objects[static_cast<std::size_t>(i)];
  }
  const SceneObject& object(std::string_view name) const { return const_cast<WorldState*>(this)->object(name); }
};

// ---------------------------------------------------------------------------
// Perception

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline DetectionRecord make_record(const std::string& name, const std::vector<Vec3>& pts, const std::vector<Vec3>& nrm,
                                   const GridSpec& spec) {
  DetectionRecord r;
  r.name = name;
  Vec3 sum{}, nsum{};
  r.box = {pts.front(), pts.front()};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sum += pts[i];
    // Faces resting against the table are not observable.
    if (nrm[i].z > -0.5) nsum += nrm[i];
    for (int a = 0; a < 3; ++a) {
      r.box.lo[a] = std::min(r.box.lo[a], pts[i][a]);
      r.box.hi[a] = std::max(r.box.hi[a], pts[i][a]);
    }
    if (spec.contains(pts[i])) r.occupancy.push_back(spec.linear(world_to_voxel(pts[i], spec)));
  }
  r.center = sum / static_cast<double>(pts.size());
  r.normal = norm(nsum) > 1e-9 ? nsum / norm(nsum) : Vec3{0, 0, 1};
  std::sort(r.occupancy.begin(), r.occupancy.end());
  r.occupancy.erase(std::unique(r.occupancy.begin(), r.occupancy.end()), r.occupancy.end());
  return r;
}

}  // namespace detail

/// Resolves deixis words to the drawer they denote.
inline std::optional<std::string> drawer_alias(std::string_view word) {
  static const std::pair<std::string_view, std::string_view> table[] = {
      {"top", "top"},          {"topmost", "top"},         {"upper", "top"},
      {"middle", "middle"},    {"second to the top", "middle"}, {"second to the bottom", "middle"},
      {"bottom", "bottom"},    {"bottommost", "bottom"},   {"lowest", "bottom"},
  };
  for (const auto& [k, v] : table)
    if (word == k) return std::string(v);
  return std::nullopt;
}

/// Ground-truth perception. Returns one record per matching object or part.
inline std::vector<DetectionRecord> detect(const WorldState& s, std::string_view query_in) {
  std::string query = detail::trim(std::string(query_in));
  std::vector<DetectionRecord> out;
  if (query.empty()) return out;
  if (query == "gripper" || query == "end effector" || query == "end-effector") {
    DetectionRecord r;
    r.name = "gripper";
    r.center = s.ee_position;
    r.box = {s.ee_position, s.ee_position};
    if (s.spec.contains(s.ee_position)) r.occupancy.push_back(s.spec.linear(world_to_voxel(s.ee_position, s.spec)));
    r.normal = vxp::normalized(s.ee_rotation.rotate({0, 0, -1}));
    out.push_back(r);
    return out;
  }

  std::string part;
  if (detail::ends_with(query, " handle")) {
    part = "handle";
    query = query.substr(0, query.size() - 7);
  }
  // "<deixis> drawer" -> canonical drawer name.
  if (detail::ends_with(query, " drawer")) {
    const std::string word = query.substr(0, query.size() - 7);
    if (auto alias = drawer_alias(word)) query = *alias + " drawer";
  }

  for (const auto& o : s.objects) {
    const bool match = o.name == query || (query == "drawer" && o.category == "drawer");
    if (!match) continue;
    if (part.empty()) {
      out.push_back(detail::make_record(o.name, world_points(o), [&] {
        std::vector<Vec3> n;
        for (const auto& v : o.normals) n.push_back(normal_to_world(o, v));
        return n;
      }(), s.spec));
    } else if (const Part* p = o.part(part)) {
      std::vector<Vec3> n;
      for (const auto& v : p->normals) n.push_back(normal_to_world(o, v));
      out.push_back(detail::make_record(o.name + " " + part, world_points(o, *p), n, s.spec));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contact and articulation

namespace detail {

inline Aabb workspace_box(const GridSpec& spec) { return {spec.world_min(), spec.world_max()}; }

inline bool is_blocker(const SceneObject& o) {
  return o.category == "cabinet" || o.category == "drawer" || (o.pushable && o.interactable);
}

inline Aabb drawer_slab(const SceneObject& d) { return box_of(d); }

/// Largest shift of box `b` along +/- axis before touching another blocker
/// or leaving the workspace.
inline double free_shift(const WorldState& s, int self, const Aabb& b, int axis, double sign, double want) {
  double allowed = want;
  const Aabb ws = workspace_box(s.spec);
  const double bound_gap = sign > 0 ? ws.hi[axis] - b.hi[axis] : b.lo[axis] - ws.lo[axis];
  allowed = std::min(allowed, std::max(0.0, bound_gap));
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (static_cast<int>(i) == self) continue;
    const SceneObject& o = s.objects[i];
    if (!is_blocker(o)) continue;
    if (s.grasp && s.grasp->object == static_cast<int>(i) && !s.grasp->handle) continue;
    const Aabb ob = box_of(o);
    bool overlap_other = true;
    for (int a = 0; a < 3; ++a) {
      if (a == axis) continue;
      if (b.hi[a] <= ob.lo[a] + 1e-9 || ob.hi[a] <= b.lo[a] + 1e-9) overlap_other = false;
    }
    if (!overlap_other) continue;
    const double gap = sign > 0 ? ob.lo[axis] - b.hi[axis] : b.lo[axis] - ob.hi[axis];
    if (gap < -1e-9) continue;  // already overlapping; ignore
    allowed = std::min(allowed, std::max(0.0, gap));
  }
  return allowed;
}

/// Resolves the ee point against every blocker, pushing free boxes and
/// drawers along the contact normal. Returns the admissible ee position.
inline Vec3 resolve_contacts(WorldState& s, const Vec3& from, Vec3 p) {
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    SceneObject& o = s.objects[i];
    if (!is_blocker(o)) continue;
    if (s.grasp && s.grasp->object == static_cast<int>(i)) continue;
    Aabb b = box_of(o);
    const double m = kContactMargin;
    if (!b.contains(p, m)) continue;
    // Penetration depth through each face; the shallowest one is the contact.
    const double pen[6] = {p.x - (b.lo.x - m), (b.hi.x + m) - p.x, p.y - (b.lo.y - m),
                           (b.hi.y + m) - p.y, p.z - (b.lo.z - m), (b.hi.z + m) - p.z};
    int face = 0;
    for (int f = 1; f < 6; ++f)
      if (pen[f] < pen[face]) face = f;
    // Coming from above always lands on the top face.
    if (from.z >= b.hi.z + m - 1e-9) face = 5;
    const int axis = face / 2;
    const double sign = (face % 2) ? -1.0 : 1.0;  // direction the box would move
    const bool horizontal = axis < 2;
    double moved = 0.0;
    if (horizontal && o.pushable && !o.articulated()) {
      const double want = pen[face];
      moved = free_shift(s, static_cast<int>(i), b, axis, sign, want);
      if (moved < want - 1e-12) ++s.flags.collision;
      o.position[axis] += sign * moved;
    } else if (o.category == "drawer" && face == 2) {
      // Pushing the front slab toward +y closes the drawer.
      const double want = pen[face];
      const double q_new = std::max(o.joint.lo, o.joint.q - want);
      moved = o.joint.q - q_new;
      o.joint.q = q_new;
    }
    b = box_of(o);
    // Leave the ee touching the (possibly moved) face.
    p[axis] = (face % 2) ? b.hi[axis] + m : b.lo[axis] - m;
  }
  return p;
}

inline void constrain_grasp(WorldState& s, Vec3& p) {
  if (!s.grasp) return;
  Grasp& g = *s.grasp;
  SceneObject& o = s.objects[static_cast<std::size_t>(g.object)];
  if (o.joint.type == JointType::prismatic) {
    const double d = dot(p - g.ee_at_grasp, o.joint.axis);
    o.joint.q = std::clamp(g.q_at_grasp + d, o.joint.lo, o.joint.hi);
    p = g.ee_at_grasp + o.joint.axis * (o.joint.q - g.q_at_grasp);
  } else if (o.joint.type == JointType::revolute_latched) {
    Joint& j = o.joint;
    const double max_press = j.lever * std::sin(j.handle_max);
    const double depth = std::clamp(g.ee_at_grasp.z - p.z, 0.0, max_press);
    j.handle = std::asin(depth / j.lever);
    if (j.handle >= j.latch_threshold) j.unlatched = true;
    Vec3 gp = g.ee_at_grasp;
    if (j.unlatched) {
      const Vec3 rg{gp.x - j.hinge.x, gp.y - j.hinge.y, 0.0};
      const Vec3 rp{p.x - j.hinge.x, p.y - j.hinge.y, 0.0};
      const double ag = std::atan2(rg.y, rg.x), ap = std::atan2(rp.y, rp.x);
      double delta = ag - ap;
      while (delta > std::numbers::pi) delta -= 2 * std::numbers::pi;
      while (delta < -std::numbers::pi) delta += 2 * std::numbers::pi;
      j.q = std::clamp(g.q_at_grasp + delta, j.lo, j.hi);
      const Vec3 arm = rotate_z(rg, -(j.q - g.q_at_grasp));
      p = {j.hinge.x + arm.x, j.hinge.y + arm.y, gp.z - depth};
    } else {
      p = {gp.x, gp.y, gp.z - depth};
    }
  } else {
    o.position = p + s.ee_rotation.rotate(g.offset);
    o.rotation = (s.ee_rotation * g.relative).normalized();
  }
}

inline void try_grasp(WorldState& s) {
  double best = kGraspReach;
  int best_i = -1;
  bool best_handle = false;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const SceneObject& o = s.objects[i];
    if (!o.graspable || !o.interactable) continue;
    const Part* handle = o.part("handle");
    const auto pts = handle ? world_points(o, *handle) : world_points(o);
    for (const auto& q : pts) {
      const double d = distance(q, s.ee_position);
      if (d < best) {
        best = d;
        best_i = static_cast<int>(i);
        best_handle = handle != nullptr;
      }
    }
  }
  if (best_i < 0) return;
  const SceneObject& o = s.objects[static_cast<std::size_t>(best_i)];
  Grasp g;
  g.object = best_i;
  g.handle = best_handle;
  g.ee_at_grasp = s.ee_position;
  g.q_at_grasp = o.joint.q;
  g.offset = s.ee_rotation.conjugate().rotate(o.position - s.ee_position);
  g.relative = (s.ee_rotation.conjugate() * o.rotation).normalized();
  s.grasp = g;
}

inline void release(WorldState& s) {
  if (!s.grasp) return;
  SceneObject& o = s.objects[static_cast<std::size_t>(s.grasp->object)];
  if (o.joint.type == JointType::revolute_latched) {
    o.joint.handle = 0.0;
    o.joint.unlatched = false;
  } else if (!o.articulated()) {
    o.position.z = o.half_extents.z;  // falls onto the table
  }
  s.grasp.reset();
}

inline bool inside_speed_region(const Monitor& m, const WorldState& s, const Vec3& p) {
  const double shrink = s.spec.voxel_size().x;
  switch (m.speed_region) {
    case Monitor::SpeedRegion::none: return false;
    case Monitor::SpeedRegion::everywhere: return true;
    case Monitor::SpeedRegion::box:
      for (int a = 0; a < 2; ++a)
        if (p[a] < m.speed_box.lo[a] + shrink || p[a] > m.speed_box.hi[a] - shrink) return false;
      return true;
    case Monitor::SpeedRegion::ball: {
      const int i = s.find(m.speed_object);
      if (i < 0) return false;
      return distance(p, box_center(s.objects[static_cast<std::size_t>(i)])) <= m.speed_radius - shrink;
    }
  }
  return false;
}

inline void update_monitor(WorldState& s, const Vec3& before, bool speed_limited) {
  Monitor& m = s.monitor;
  const Vec3& p = s.ee_position;
  if (!m.clearance_object.empty()) {
    const int i = s.find(m.clearance_object);
    if (i >= 0) {
      const SceneObject& o = s.objects[static_cast<std::size_t>(i)];
      const double d = m.clearance_to_surface ? distance_to_box(p, box_of(o)) : distance(p, box_center(o));
      m.min_clearance = std::min(m.min_clearance, d);
    }
  }
  const int t = m.tracked_object.empty() ? -1 : s.find(m.tracked_object);
  if (t >= 0) {
    const Vec3 c = box_center(s.objects[static_cast<std::size_t>(t)]);
    if (!m.obstacle_object.empty()) {
      const int k = s.find(m.obstacle_object);
      if (k >= 0) {
        const Vec3 oc = box_center(s.objects[static_cast<std::size_t>(k)]);
        m.min_obstacle_clearance = std::min(m.min_obstacle_clearance, std::hypot(c.x - oc.x, c.y - oc.y));
      }
    }
    if (m.track_line) {
      const Vec3 ab{m.line_b.x - m.line_a.x, m.line_b.y - m.line_a.y, 0};
      const Vec3 ac{c.x - m.line_a.x, c.y - m.line_a.y, 0};
      const double len2 = dot(ab, ab);
      const double u = len2 > 0 ? std::clamp(dot(ac, ab) / len2, 0.0, 1.0) : 0.0;
      m.max_line_deviation = std::max(m.max_line_deviation, norm(ac - ab * u));
    }
    if (m.track_region) {
      if (c.x < m.region.lo.x || c.x > m.region.hi.x || c.y < m.region.lo.y || c.y > m.region.hi.y)
        m.left_region = true;
    }
  }
  if (m.side_axis >= 0) {
    const int i = s.find(m.side_object);
    if (i >= 0) {
      const double ref = box_center(s.objects[static_cast<std::size_t>(i)])[m.side_axis];
      if (m.side_sign * (p[m.side_axis] - ref) < 0) m.side_violated = true;
    }
  }
  if (speed_limited && inside_speed_region(m, s, before) && inside_speed_region(m, s, p)) {
    const double expected = kVmax * m.speed_scale;
    ++m.speed_ticks;
    if (std::abs(distance(before, p) - expected) > 0.25 * expected) ++m.speed_violations;
  }
}

inline void record(WorldState& s, std::string event = {}) {
  if (!s.record_history) return;
  TickRecord r{s.tick, s.ee_position, s.gripper, {}, std::move(event)};
  for (const auto& o : s.objects)
    if (o.articulated()) r.joints.push_back(o.joint.q);
  s.history.push_back(std::move(r));
}

}  // namespace detail

inline Vec3 clamp_to_workspace(const GridSpec& spec, const Vec3& p, bool* clamped = nullptr) {
  Vec3 out = p;
  for (int a = 0; a < 3; ++a) out[a] = std::clamp(p[a], spec.world_min()[a], spec.world_max()[a]);
  if (clamped) *clamped = !(out == p);
  return out;
}

// ---------------------------------------------------------------------------
// Disturbances

/// Applies `ev` now. Events whose target is missing or whose result would
/// leave the workspace are rejected and flagged.
inline void inject_disturbance_inplace(WorldState& s, const DisturbanceEvent& ev) {
  if (ev.schedule != s.tick) fail(ErrorKind::invalid_input, "disturbance scheduled for a different tick");
  switch (ev.kind) {
    case DisturbanceKind::robot_force: {
      Vec3 d = ev.vector;
      if (norm(d) > kForceCap) d = d * (kForceCap / norm(d));
      const Vec3 from = s.ee_position;
      Vec3 p = clamp_to_workspace(s.spec, s.ee_position + d);
      if (s.grasp && s.objects[static_cast<std::size_t>(s.grasp->object)].articulated()) {
        detail::constrain_grasp(s, p);
      } else {
        p = detail::resolve_contacts(s, from, p);
        s.ee_position = p;
        detail::constrain_grasp(s, p);
      }
      s.ee_position = p;
      break;
    }
    case DisturbanceKind::object_displacement: {
      const int i = s.find(ev.target);
      const Aabb ws = detail::workspace_box(s.spec);
      if (i < 0 || !ws.contains(ev.vector)) {
        ++s.flags.rejected;
        return;
      }
      SceneObject& o = s.objects[static_cast<std::size_t>(i)];
      if (o.articulated()) {
        ++s.flags.rejected;
        return;
      }
      if (s.grasp && s.grasp->object == i) s.grasp.reset();
      o.position = {ev.vector.x, ev.vector.y, o.half_extents.z};
      break;
    }
    case DisturbanceKind::progress_reversal: {
      const int i = s.find(ev.target);
      if (i < 0 || !s.objects[static_cast<std::size_t>(i)].articulated()) {
        ++s.flags.rejected;
        return;
      }
      SceneObject& o = s.objects[static_cast<std::size_t>(i)];
      if (s.grasp && s.grasp->object == i) s.grasp.reset();
      o.joint.q = o.joint.q_initial;
      if (o.category == "drawer") {
        // The reopened front shoves the end-effector back.
        const Aabb b = box_of(o);
        if (b.contains(s.ee_position, kContactMargin)) s.ee_position.y = b.lo.y - kContactMargin;
      }
      break;
    }
  }
  s.fired.push_back(ev);
  detail::record(s, std::string(to_string(ev.kind)));
}

inline WorldState inject_disturbance(WorldState s, const DisturbanceEvent& ev) {
  inject_disturbance_inplace(s, ev);
  return s;
}

/// Fires every pending event that is due at the current tick.
inline void fire_due_events(WorldState& s) {
  for (std::size_t i = 0; i < s.pending.size();) {
    DisturbanceEvent ev = s.pending[i];
    bool due = ev.schedule == s.tick;
    if (ev.joint_trigger) {
      const int k = s.find(ev.target);
      due = ev.schedule <= s.tick && k >= 0 && s.objects[static_cast<std::size_t>(k)].joint.q <= *ev.joint_trigger;
      ev.schedule = s.tick;
    } else if (ev.schedule < s.tick) {
      s.pending.erase(s.pending.begin() + static_cast<long>(i));
      continue;
    }
    if (!due) {
      ++i;
      continue;
    }
    s.pending.erase(s.pending.begin() + static_cast<long>(i));
    inject_disturbance_inplace(s, ev);
  }
}

// ---------------------------------------------------------------------------
// Stepping

/// One tick toward `wp`, capped at v_max * scale. `contacts` disables
/// contact resolution for primitive approach moves.
inline void step_waypoint_inplace(WorldState& s, const Waypoint& wp, bool contacts = true) {
  bool clamped = false;
  const Vec3 goal = clamp_to_workspace(s.spec, wp.position, &clamped);
  if (clamped || !is_finite(wp.position)) ++s.flags.clamped;
  const double scale = wp.velocity_scale > 0 && std::isfinite(wp.velocity_scale) ? wp.velocity_scale : 1.0;
  const double cap = kVmax * scale;
  const Vec3 before = s.ee_position;
  const double want = distance(goal, before);
  const Vec3 target = want > cap ? before + (goal - before) * (cap / want) : goal;

  s.ee_rotation = wp.rotation.normalized();
  if (wp.gripper != s.gripper) {
    s.gripper = wp.gripper ? 1 : 0;
    if (s.gripper) detail::try_grasp(s);
    else detail::release(s);
  }

  const double len = distance(target, before);
  const int n = std::max(1, static_cast<int>(std::ceil(len / 0.005)));
  Vec3 p = before;
  for (int k = 1; k <= n; ++k) {
    Vec3 next = before + (target - before) * (static_cast<double>(k) / n);
    if (s.grasp && s.objects[static_cast<std::size_t>(s.grasp->object)].articulated()) {
      detail::constrain_grasp(s, next);
    } else {
      if (contacts) next = detail::resolve_contacts(s, p, next);
      s.ee_position = next;
      detail::constrain_grasp(s, next);
    }
    p = next;
    s.ee_position = p;
  }
  ++s.tick;
  detail::update_monitor(s, before, want >= 0.75 * cap);
  detail::record(s);
  fire_due_events(s);
}

inline WorldState step_waypoint(WorldState s, const Waypoint& wp) {
  step_waypoint_inplace(s, wp);
  return s;
}

// ---------------------------------------------------------------------------
// Push primitive

struct PushOutcome {
  bool contact_miss = false;
  bool collision = false;
  double moved = 0.0;
  int object = -1;
};

/// Finds the interactable object whose surface lies nearest to `contact`.
inline int object_near(const WorldState& s, const Vec3& contact, double reach) {
  int best = -1;
  double best_d = reach;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const SceneObject& o = s.objects[i];
    if (!o.interactable || !(o.pushable || o.category == "drawer")) continue;
    for (const auto& p : world_points(o)) {
      const double d = distance(p, contact);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
  }
  return best;
}

/// Approach, planar push, retreat. The contacted object translates along
/// `direction` (drawers along their joint axis) until `distance` is covered
/// or a collision stops it.
inline PushOutcome apply_push_inplace(WorldState& s, const Vec3& contact, const Vec3& direction_in, double dist) {
  PushOutcome out;
  out.object = object_near(s, contact, 0.02);
  if (out.object < 0) {
    ++s.flags.contact_miss;
    out.contact_miss = true;
    return out;
  }
  if (s.grasp) detail::release(s);
  s.gripper = 0;
  const Vec3 dir = vxp::normalized(Vec3{direction_in.x, direction_in.y, 0.0});
  const Quat rot = s.ee_rotation;
  auto move_to = [&](const Vec3& goal) {
    for (int guard = 0; guard < 200 && distance(s.ee_position, goal) > 1e-9; ++guard)
      step_waypoint_inplace(s, {goal, rot, 1.0, 0}, false);
  };
  const Vec3 pre = contact - dir * 0.03;
  const double safe_z = std::min(s.spec.world_max().z, std::max(contact.z, 0.0) + 0.10);
  move_to({s.ee_position.x, s.ee_position.y, std::max(s.ee_position.z, safe_z)});
  move_to({pre.x, pre.y, safe_z});
  move_to(pre);
  move_to(contact);

  double remaining = std::max(0.0, dist);
  while (remaining > 1e-12) {
    const std::size_t idx = static_cast<std::size_t>(out.object);
    const double step = std::min(remaining, kVmax);
    SceneObject& o = s.objects[idx];
    double moved = 0.0;
    const Vec3 before = s.ee_position;
    if (o.category == "drawer") {
      const double along = -dot(dir, o.joint.axis) * step;  // closing is -q
      const double q_new = std::clamp(o.joint.q - along, o.joint.lo, o.joint.hi);
      moved = std::abs(o.joint.q - q_new);
      o.joint.q = q_new;
      s.ee_position = s.ee_position + dir * moved;
    } else {
      // Sub-stepped so that the first blocking contact truncates the motion.
      const int n = std::max(1, static_cast<int>(std::ceil(step / 0.002)));
      for (int k = 0; k < n; ++k) {
        const double ds = step / n;
        const Aabb b = box_of(o);
        double dx = dir.x * ds, dy = dir.y * ds;
        const double fx = detail::free_shift(s, static_cast<int>(idx), b, 0, dx >= 0 ? 1 : -1, std::abs(dx));
        const double fy = detail::free_shift(s, static_cast<int>(idx), b, 1, dy >= 0 ? 1 : -1, std::abs(dy));
        if (fx < std::abs(dx) - 1e-12 || fy < std::abs(dy) - 1e-12) {
          out.collision = true;
          break;
        }
        o.position.x += dx;
        o.position.y += dy;
        moved += ds;
      }
      s.ee_position = s.ee_position + dir * moved;
    }
    ++s.tick;
    detail::update_monitor(s, before, true);
    detail::record(s);
    out.moved += moved;
    remaining -= step;
    fire_due_events(s);
    if (out.collision || moved < step - 1e-12) break;
  }
  if (out.collision) ++s.flags.collision;
  const Vec3 back = s.ee_position - dir * 0.03;
  move_to(back);
  move_to({back.x, back.y, safe_z});
  return out;
}

inline WorldState apply_push(WorldState s, const Vec3& contact, const Vec3& direction, double dist) {
  apply_push_inplace(s, contact, direction, dist);
  return s;
}

}  // namespace vxp::sim
