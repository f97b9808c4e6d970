#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "vxp/sim/task.hpp"

namespace vxp::sim {

inline constexpr double kPositionTolerance = 0.05;
inline constexpr double kJointTolerance = 0.05;  // fraction of range
inline constexpr double kMoveHeight = 0.10;
inline constexpr double kPrepositionOffset = 0.10;
inline constexpr double kCorridorClearance = 0.05;
inline constexpr double kAvoidItemClearance = 0.02;
inline constexpr double kObstacleClearance = 0.06;
inline constexpr double kDoorOpenAngle = 0.35;
inline constexpr int kMaxResets = 1000;

inline bool contains_word(std::string_view s, std::string_view w) { return s.find(w) != std::string_view::npos; }

/// Named table locations: sides sit on the side's centre line, corners at
/// the intersection of two sides.
inline Vec3 pos_point(std::string_view pos) {
  double x = 0.5, y = 0.5;
  if (contains_word(pos, "left")) x = 0.17;
  if (contains_word(pos, "right")) x = 0.83;
  if (contains_word(pos, "front")) y = 0.17;
  if (contains_word(pos, "back")) y = 0.83;
  return {x, y, kMoveHeight};
}

inline Aabb region_box(std::string_view region) {
  Aabb b{{0, 0, 0}, {1, 1, 1}};
  if (contains_word(region, "left")) b.hi.x = 0.35;
  if (contains_word(region, "right")) b.lo.x = 0.65;
  if (contains_word(region, "front")) b.hi.y = 0.35;
  if (contains_word(region, "back")) b.lo.y = 0.65;
  return b;
}

inline Vec3 preposition_direction(std::string_view prep) {
  if (contains_word(prep, "left")) return {-1, 0, 0};
  if (contains_word(prep, "right")) return {1, 0, 0};
  if (contains_word(prep, "front")) return {0, -1, 0};
  if (contains_word(prep, "back")) return {0, 1, 0};
  return {0, 0, 1};
}

inline double binding_number(const TaskSpec& t, const std::string& slot) { return std::stod(t.at(slot)); }

inline std::string drawer_name(std::string_view deixis) {
  auto alias = drawer_alias(deixis);
  if (!alias) fail(ErrorKind::invalid_input, "unknown drawer deixis '" + std::string(deixis) + "'");
  return *alias + " drawer";
}

inline double xy_distance(const Vec3& a, const Vec3& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Minimum distance from segment ab to any box in `boxes`.
inline double segment_clearance(const Vec3& a, const Vec3& b, const std::vector<Aabb>& boxes) {
  double best = 1e9;
  const int n = std::max(2, static_cast<int>(std::ceil(distance(a, b) / 0.005)) + 1);
  for (int i = 0; i < n; ++i) {
    const Vec3 p = a + (b - a) * (static_cast<double>(i) / (n - 1));
    for (const auto& box : boxes) best = std::min(best, distance_to_box(p, box));
  }
  return best;
}

/// The goal point of an end-effector task, evaluated on the current state.
inline std::optional<Vec3> ee_goal(const TaskSpec& t, const WorldState& s) {
  const std::string& id = t.template_id;
  if (id == "move_preposition")
    return box_center(s.object(t.at("obj"))) + preposition_direction(t.at("preposition")) * kPrepositionOffset;
  if (id == "move_avoid_item") return box_center(s.object(t.at("item"))) + Vec3{0, 0, kPrepositionOffset};
  if (id == "move_region") return pos_point(t.at("region"));
  if (id == "move_stay_side" || id == "move_velocity_near" || id == "move_keep_distance" ||
      id == "move_velocity_region")
    return pos_point(t.at("pos"));
  return std::nullopt;
}

/// Success predicate per template. Trajectory-level conditions read the
/// running monitor installed at reset.
inline bool success_check(const TaskSpec& t, const WorldState& s) {
  const std::string& id = t.template_id;
  const Monitor& m = s.monitor;
  const double voxel = s.spec.voxel_size().x;
  auto near_goal = [&] { return distance(s.ee_position, *ee_goal(t, s)) <= kPositionTolerance; };
  auto obj_center = [&](const std::string& slot) { return box_center(s.object(t.at(slot))); };

  if (id == "move_preposition") return near_goal();
  if (id == "move_stay_side") return near_goal() && !m.side_violated;
  if (id == "move_velocity_near" || id == "move_velocity_region") return near_goal() && m.speed_violations == 0;
  if (id == "move_keep_distance") return near_goal() && m.min_clearance >= binding_number(t, "dist") / 100.0 - voxel;
  if (id == "move_avoid_item") return near_goal() && m.min_clearance >= kAvoidItemClearance;
  if (id == "move_region") {
    const Aabb r = region_box(t.at("region"));
    const Vec3& p = s.ee_position;
    return p.x >= r.lo.x && p.x <= r.hi.x && p.y >= r.lo.y && p.y <= r.hi.y;
  }
  if (id == "close_drawer" || id == "close_drawer_plain") {
    const Joint& j = s.object(drawer_name(t.at("deixis"))).joint;
    return j.q - j.lo <= kJointTolerance * (j.hi - j.lo);
  }
  if (id == "push_along_line")
    return xy_distance(obj_center("obj"), m.line_b) <= kPositionTolerance && m.max_line_deviation <= kPositionTolerance;
  if (id == "grasp_velocity") {
    const int i = s.find(t.at("obj"));
    return s.grasp && s.grasp->object == i && m.speed_ticks > 0 && m.speed_violations == 0;
  }
  if (id == "drop_at_pos") {
    const int i = s.find(t.at("obj"));
    const bool held = s.grasp && s.grasp->object == i;
    return !held && xy_distance(obj_center("obj"), pos_point(t.at("pos"))) <= kPositionTolerance;
  }
  if (id == "push_stay_region" || id == "sweep_to_region") {
    const Vec3 c = obj_center("obj");
    const Aabb r = region_box(t.at("region"));
    const bool inside = c.x >= r.lo.x && c.x <= r.hi.x && c.y >= r.lo.y && c.y <= r.hi.y;
    if (id == "sweep_to_region") return inside;
    return inside && !m.left_region && xy_distance(c, m.start) >= 0.10;
  }
  if (id == "push_avoid")
    return xy_distance(obj_center("obj"), pos_point(t.at("pos"))) <= kPositionTolerance &&
           m.min_obstacle_clearance >= kObstacleClearance;
  if (id == "push_to_pos") return xy_distance(obj_center("obj"), pos_point(t.at("pos"))) <= kPositionTolerance;
  if (id == "open_door") return s.object("door").joint.q >= kDoorOpenAngle;
  fail(ErrorKind::invalid_input, "no success predicate for '" + id + "'");
}

// ---------------------------------------------------------------------------
// Reset

namespace detail {

struct Builder {
  WorldState& s;
  std::mt19937_64& rng;

  double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

  std::vector<Aabb> boxes(const std::vector<std::string>& except = {}) const {
    std::vector<Aabb> out;
    for (const auto& o : s.objects) {
      if (!o.interactable && o.category != "cabinet") continue;
      if (std::find(except.begin(), except.end(), o.name) != except.end()) continue;
      out.push_back(box_of(o));
    }
    return out;
  }

  bool free_at(const Vec3& c, const Vec3& half, double gap) const {
    const Aabb b{c - half, c + half};
    for (const auto& o : s.objects) {
      if (!o.interactable && o.category != "cabinet") continue;
      if (b.overlaps(box_of(o), gap)) return false;
    }
    return true;
  }

  /// Places `o` uniformly inside [lo, hi]^2 away from other objects.
  bool place(SceneObject o, double lo = 0.12, double hi = 0.88, double gap = 0.05) {
    for (int k = 0; k < 60; ++k) {
      const double x = uni(lo, hi), y = uni(lo, hi);
      const Vec3 c{x, y, o.half_extents.z};
      if (!free_at(c, o.half_extents, gap)) continue;
      o.position = c;
      s.objects.push_back(std::move(o));
      return true;
    }
    return false;
  }

  std::vector<std::string> spare_colors(const std::vector<std::string>& used) const {
    std::vector<std::string> out;
    for (const auto& c : all_colors()) {
      bool taken = false;
      for (const auto& u : used)
        if (u.rfind(c + " ", 0) == 0) taken = true;
      if (!taken) out.push_back(c);
    }
    return out;
  }

  void distractors(const std::vector<std::string>& used, int blocks, int lines) {
    auto colors = spare_colors(used);
    std::shuffle(colors.begin(), colors.end(), rng);
    int k = 0;
    for (int i = 0; i < blocks && k < static_cast<int>(colors.size()); ++i, ++k)
      place(make_block(colors[static_cast<std::size_t>(k)], 0, 0));
    for (int i = 0; i < lines && k < static_cast<int>(colors.size()); ++i, ++k)
      s.objects.push_back(
          make_line(colors[static_cast<std::size_t>(k)], uni(0.2, 0.8), uni(0.2, 0.8), uni(0, std::numbers::pi)));
  }
};

inline std::string color_of(const std::string& obj) { return obj.substr(0, obj.find(' ')); }

inline Vec3 random_horizontal(std::mt19937_64& rng, double lo, double hi) {
  const double a = std::uniform_real_distribution<double>(0, 2 * std::numbers::pi)(rng);
  const double r = std::uniform_real_distribution<double>(lo, hi)(rng);
  return {r * std::cos(a), r * std::sin(a), 0.0};
}

/// Builds one candidate scene; returns false when the draw is infeasible.
inline bool build_scene(const TaskSpec& t, WorldState& s, std::mt19937_64& rng) {
  Builder b{s, rng};
  const std::string& id = t.template_id;
  const Vec3 rest = kRestPosition;
  Monitor& m = s.monitor;

  auto corridor_ok = [&](const Vec3& goal, const std::vector<std::string>& except, double need) {
    return segment_clearance(rest, goal, b.boxes(except)) >= need;
  };
  auto push_corridor_ok = [&](const std::string& obj, const Vec3& goal) {
    const SceneObject& o = s.object(obj);
    const Vec3 c = box_center(o);
    const Vec3 g{goal.x, goal.y, c.z};
    if (segment_clearance(c, g, b.boxes({obj})) < kCorridorClearance + o.half_extents.x) return false;
    // Room behind the object for the pusher.
    const Vec3 back = c - vxp::normalized(g - c) * 0.08;
    if (back.x < 0.02 || back.x > 0.98 || back.y < 0.02 || back.y > 0.98) return false;
    return segment_clearance(c, back, b.boxes({obj})) >= 0.02;
  };

  if (id == "move_preposition" || id == "move_stay_side" || id == "move_velocity_near" ||
      id == "move_keep_distance" || id == "grasp_velocity" || id == "push_to_pos" || id == "push_avoid" ||
      id == "push_stay_region" || id == "sweep_to_region" || id == "drop_at_pos" || id == "push_along_line") {
    const std::string obj = t.at("obj");
    std::vector<std::string> used{obj};
    if (t.has("obstacle")) used.push_back(t.at("obstacle"));
    if (t.has("line")) used.push_back(t.at("line"));

    if (id == "push_along_line") {
      const Vec3 c{b.uni(0.3, 0.7), b.uni(0.3, 0.7), 0.001};
      SceneObject line = make_line(color_of(t.at("line")), c.x, c.y, b.uni(0, 2 * std::numbers::pi));
      const Vec3 a = line_endpoint(line, 0), e = line_endpoint(line, 1);
      s.objects.push_back(line);
      s.objects.push_back(make_block(color_of(obj), a.x, a.y));
      m.track_line = true;
      m.line_a = a;
      m.line_b = e;
      b.distractors(used, 2, 1);
      return push_corridor_ok(obj, e) && segment_clearance(a, e, b.boxes({obj, t.at("line")})) >= 0.08;
    }
    if (id == "push_stay_region") {
      const Aabb r = region_box(t.at("region"));
      const Vec3 anchor = pos_point(t.at("region"));
      const Vec3 c{b.uni(std::max(r.lo.x + 0.06, 0.08), std::min(r.hi.x - 0.06, 0.92)),
                   b.uni(std::max(r.lo.y + 0.06, 0.08), std::min(r.hi.y - 0.06, 0.92)), kBlockHalf};
      if (xy_distance(c, anchor) < 0.15) return false;
      s.objects.push_back(make_block(color_of(obj), c.x, c.y));
      m.track_region = true;
      m.region = r;
      m.tracked_object = obj;
      m.start = c;
      b.distractors(used, 2, 2);
      return push_corridor_ok(obj, anchor);
    }
    // Side constraints may require the object near the table edge.
    const double lo = id == "move_stay_side" ? 0.05 : 0.12, hi = id == "move_stay_side" ? 0.95 : 0.88;
    if (!b.place(make_block(color_of(obj), 0, 0), lo, hi)) return false;
    if (t.has("obstacle") && !b.place(make_block(color_of(t.at("obstacle")), 0, 0))) return false;
    b.distractors(used, 2, 2);
    const Vec3 oc = box_center(s.object(obj));

    if (id == "move_preposition") {
      const Vec3 goal = *ee_goal(t, s);
      if (goal.x < 0.03 || goal.x > 0.97 || goal.y < 0.03 || goal.y > 0.97) return false;
      return corridor_ok(goal, {obj}, kCorridorClearance) && segment_clearance(rest, goal, b.boxes()) >= 0.03 &&
             b.free_at(goal, {0.01, 0.01, 0.01}, 0.04);
    }
    if (id == "move_stay_side") {
      const Vec3 dir = preposition_direction(t.at("preposition"));
      int axis = 0;
      for (int a = 0; a < 3; ++a)
        if (dir[a] != 0) axis = a;
      m.side_axis = axis;
      m.side_sign = dir[axis];
      m.side_object = obj;
      const Vec3 goal = *ee_goal(t, s);
      if (dir[axis] * (rest[axis] - oc[axis]) < 0.05 || dir[axis] * (goal[axis] - oc[axis]) < 0.03) return false;
      return corridor_ok(goal, {}, kCorridorClearance);
    }
    if (id == "move_velocity_near") {
      m.speed_region = Monitor::SpeedRegion::ball;
      m.speed_object = obj;
      m.speed_radius = binding_number(t, "dist") / 100.0;
      m.speed_scale = velocity_scale_of(t.at("velocity"));
      return corridor_ok(*ee_goal(t, s), {}, kCorridorClearance);
    }
    if (id == "move_keep_distance") {
      m.clearance_object = obj;
      const double d = binding_number(t, "dist") / 100.0;
      const Vec3 goal = *ee_goal(t, s);
      if (distance(goal, oc) < d + 0.04 || distance(rest, oc) < d + 0.04) return false;
      return corridor_ok(goal, {obj}, kCorridorClearance) && segment_clearance(rest, goal, {box_of(s.object(obj))}) >= 0.02;
    }
    if (id == "grasp_velocity") {
      m.speed_region = Monitor::SpeedRegion::everywhere;
      m.speed_scale = velocity_scale_of(t.at("velocity"));
      return corridor_ok(oc + Vec3{0, 0, kBlockHalf}, {obj}, kCorridorClearance);
    }
    if (id == "drop_at_pos") {
      SceneObject& o = s.object(obj);
      o.position = rest - Vec3{0, 0, 0.03};
      s.gripper = 1;
      Grasp g;
      g.object = s.find(obj);
      g.offset = o.position - rest;
      g.ee_at_grasp = rest;
      s.grasp = g;
      const Vec3 goal = pos_point(t.at("pos"));
      return b.free_at({goal.x, goal.y, kBlockHalf}, {kBlockHalf, kBlockHalf, kBlockHalf}, 0.05) &&
             corridor_ok(goal, {obj}, kCorridorClearance);
    }
    if (id == "push_to_pos" || id == "push_avoid" || id == "sweep_to_region") {
      const Vec3 goal = id == "sweep_to_region" ? pos_point(t.at("region")) : pos_point(t.at("pos"));
      if (xy_distance(oc, goal) < 0.15) return false;
      if (id == "sweep_to_region") {
        const Aabb r = region_box(t.at("region"));
        if (oc.x >= r.lo.x - 0.1 && oc.x <= r.hi.x + 0.1 && oc.y >= r.lo.y - 0.1 && oc.y <= r.hi.y + 0.1) return false;
      }
      if (id == "push_avoid") {
        m.tracked_object = obj;
        m.obstacle_object = t.at("obstacle");
        const Vec3 ob = box_center(s.object(t.at("obstacle")));
        if (xy_distance(ob, goal) < 0.10 || xy_distance(ob, oc) < 0.10) return false;
      }
      return push_corridor_ok(obj, goal);
    }
  }

  if (id == "move_velocity_region") {
    b.distractors({}, 2, 2);
    m.speed_region = Monitor::SpeedRegion::box;
    m.speed_box = region_box(t.at("region"));
    m.speed_scale = velocity_scale_of(t.at("velocity"));
    return corridor_ok(*ee_goal(t, s), {}, kCorridorClearance);
  }

  if (id == "move_region") {
    b.distractors({}, 2, 2);
    return corridor_ok(*ee_goal(t, s), {}, kCorridorClearance);
  }

  if (id == "move_avoid_item") {
    const std::string item = t.at("item"), other = t.at("other");
    if (!b.place(make_item(item, 0, 0), 0.15, 0.85, 0.05)) return false;
    if (!b.place(make_item(other, 0, 0), 0.15, 0.85, 0.08)) return false;
    m.clearance_object = other;
    m.clearance_to_surface = true;
    const Vec3 goal = *ee_goal(t, s);
    if (distance(box_center(s.object(other)), goal) < 0.18) return false;
    if (distance(box_center(s.object(other)), rest) < 0.18) return false;
    return corridor_ok(goal, {item}, kCorridorClearance);
  }

  if (id == "close_drawer" || id == "close_drawer_plain") {
    CabinetLayout L;
    const double shift = b.uni(-0.08, 0.08);
    L.x0 += shift;
    L.x1 += shift;
    const std::string target = drawer_name(t.at("deixis"));
    std::array<double, 3> open{0, 0, 0};
    for (int i = 0; i < 3; ++i)
      if (std::string(L.slots[i].name) + " drawer" == target) open[static_cast<std::size_t>(i)] = b.uni(0.08, 0.18);
    for (auto& o : make_cabinet(open, L)) s.objects.push_back(std::move(o));
    b.distractors({}, 1, 1);
    // Keep the floor in front of the cabinet clear.
    for (const auto& o : s.objects)
      if (o.category == "block" && o.position.y > 0.45) return false;
    return true;
  }

  if (id == "open_door") {
    DoorLayout L;
    L.hinge.x += b.uni(-0.03, 0.03);
    L.hinge.y += b.uni(-0.03, 0.03);
    s.objects.push_back(make_door(L));
    return true;
  }
  fail(ErrorKind::invalid_input, "no scene builder for '" + id + "'");
}

/// Derives disturbance events from the scene so that they land mid-task.
inline std::vector<DisturbanceEvent> derive_disturbances(const TaskSpec& t, const WorldState& s, std::mt19937_64& rng) {
  std::vector<DisturbanceEvent> out;
  DisturbanceEvent force;
  force.kind = DisturbanceKind::robot_force;
  force.schedule = 2;
  force.vector = random_horizontal(rng, 0.03, 0.05);
  out.push_back(force);

  const std::string& id = t.template_id;
  if (id == "close_drawer" || id == "close_drawer_plain") {
    const SceneObject& d = s.object(drawer_name(t.at("deixis")));
    DisturbanceEvent rev;
    rev.kind = DisturbanceKind::progress_reversal;
    rev.target = d.name;
    rev.schedule = 0;
    rev.joint_trigger = 0.2 * d.joint.q_initial;
    out.push_back(rev);
    return out;
  }
  std::string target;
  if (t.has("item")) target = t.at("item");
  else if (t.has("obj") && id != "drop_at_pos") target = t.at("obj");
  if (target.empty()) return out;
  const SceneObject& o = s.object(target);
  const Vec3 c = box_center(o);
  for (int k = 0; k < 100; ++k) {
    const Vec3 to = c + random_horizontal(rng, 0.08, 0.15);
    if (to.x < 0.15 || to.x > 0.85 || to.y < 0.15 || to.y > 0.85) continue;
    WorldState probe = s;
    probe.object(target).position = {to.x, to.y, o.half_extents.z};
    bool clear = true;
    for (const auto& other : probe.objects)
      if (other.name != target && (other.interactable || other.category == "cabinet") &&
          box_of(other).overlaps(box_of(probe.object(target)), 0.04))
        clear = false;
    if (!clear) continue;
    if (id == "move_avoid_item") {
      const Vec3 goal = *ee_goal(t, probe);
      if (distance(box_center(probe.object(t.at("other"))), goal) < 0.18) continue;
    }
    DisturbanceEvent disp;
    disp.kind = DisturbanceKind::object_displacement;
    disp.target = target;
    disp.vector = {to.x, to.y, o.half_extents.z};
    const auto goal = ee_goal(t, s);
    const double travel = goal ? distance(kRestPosition, *goal) : 0.3;
    disp.schedule = std::max(3L, static_cast<long>(travel / kVmax / 2.0));
    out.push_back(disp);
    break;
  }
  return out;
}

}  // namespace detail

inline std::uint64_t episode_seed(const TaskSpec& t, std::uint64_t seed) {
  std::uint64_t h = fnv1a(t.template_id);
  for (const auto& [k, v] : t.bindings) h = fnv1a(v, fnv1a(k, h));
  return h ^ (seed * 0x9e3779b97f4a7c15ull);
}

/// Seeded scene randomization with rejection until the task is neither
/// already solved nor blocked.
inline WorldState reset(const TaskSpec& task, std::uint64_t seed, const GridSpec& spec = {}) {
  template_info(task.template_id);
  std::mt19937_64 rng(episode_seed(task, seed));
  for (int attempt = 0; attempt < kMaxResets; ++attempt) {
    WorldState s;
    s.spec = spec;
    s.rng.seed(rng());
    if (!detail::build_scene(task, s, rng)) continue;
    if (success_check(task, s)) continue;
    if (!task.schedule.empty()) s.pending = task.schedule;
    else if (task.disturbances) s.pending = detail::derive_disturbances(task, s, rng);
    return s;
  }
  fail(ErrorKind::setup, "could not sample a feasible scene for '" + task.instruction() + "'");
}

/// Flattened observation: ee position, ee quaternion, gripper, then task
/// entities (object centres, or joint values for articulated ones).
inline std::vector<double> observe(const TaskSpec& t, const WorldState& s) {
  std::vector<double> o{s.ee_position.x, s.ee_position.y, s.ee_position.z, s.ee_rotation.w,
                        s.ee_rotation.x,  s.ee_rotation.y,  s.ee_rotation.z,  static_cast<double>(s.gripper)};
  if (t.template_id == "open_door") {
    const Joint& j = s.object("door").joint;
    o.push_back(j.handle);
    o.push_back(j.q);
    return o;
  }
  for (const char* slot : {"obj", "obstacle", "item", "other"}) {
    if (!t.has(slot)) continue;
    const Vec3 c = box_center(s.object(t.at(slot)));
    o.insert(o.end(), {c.x, c.y, c.z});
  }
  if (t.has("deixis")) o.push_back(s.object(drawer_name(t.at("deixis"))).joint.q);
  return o;
}

}  // namespace vxp::sim
