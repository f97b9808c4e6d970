#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vxp/dynamics/push.hpp"
#include "vxp/lmp/runtime.hpp"
#include "vxp/sim/world.hpp"
#include "vxp/voxel/cost.hpp"

namespace vxp::planner {

using sim::Waypoint;
using sim::WorldState;
using dynamics::PushAction;

struct PlannerConfig {
  CostWeights weights{};
  int replan_interval = 4;
  int n_max = 200;
  int samples = 256;
  /// Per-waypoint position noise, in voxels.
  double noise_sigma = 1.0;
  double lambda_len = 0.1;
  double lambda_rot = 0.01;
  /// Normalized smoothed avoidance above this is treated as occupied.
  double collision_threshold = 0.5;
  long tick_budget = 600;
  /// Largest rotation change between consecutive waypoints, radians.
  double max_turn = 0.2;
  /// Consecutive replans without progress before MPC gives up.
  int stuck_limit = 3;

  int push_samples = 256;
  double push_collision_penalty = 10.0;
  int max_pushes = 10;
  /// Predicted vs observed entity centre after a push, meters.
  double divergence_threshold = 0.03;
};

struct Trajectory {
  std::vector<Waypoint> waypoints;
  std::vector<VoxelIndex> voxels;
  lmp::EntityRef entity;
};

/// Everything the planner needs from one evaluated MapSet.
struct PlanContext {
  const lmp::MapSet* maps = nullptr;
  CostMap cost;
  std::vector<double> aff_norm, avoid_norm;
  std::vector<unsigned char> blocked;

  const GridSpec& spec() const { return cost.spec; }
  bool collides(const VoxelIndex& v) const { return !spec().contains(v) || blocked[spec().linear(v)]; }
};

namespace detail {

inline bool is_self(const sim::SceneObject& o, const lmp::EntityRef& e) {
  return e.name == o.name || e.name.rfind(o.name + " ", 0) == 0;
}

inline void block_box(std::vector<unsigned char>& mask, const GridSpec& spec, const sim::Aabb& b) {
  const VoxelIndex lo = spec.clamp(world_to_voxel(spec.clamp(b.lo), spec));
  const VoxelIndex hi = spec.clamp(world_to_voxel(spec.clamp(b.hi), spec));
  for (int x = lo.x; x <= hi.x; ++x)
    for (int y = lo.y; y <= hi.y; ++y)
      for (int z = lo.z; z <= hi.z; ++z) {
        const VoxelIndex v{x, y, z};
        const Vec3 c = voxel_to_world(v, spec);
        if (c.x > b.lo.x && c.x < b.hi.x && c.y > b.lo.y && c.y < b.hi.y && c.z > b.lo.z && c.z < b.hi.z)
          mask[spec.linear(v)] = 1;
      }
}

}  // namespace detail

/// Cost map plus collision mask. Blocker boxes other than the entity and the
/// grasped object count as occupied wherever they contain a voxel centre.
inline PlanContext make_context(const lmp::MapSet& maps, const WorldState& s, const PlannerConfig& cfg) {
  PlanContext ctx;
  ctx.maps = &maps;
  const ValueMap* aff = maps.affordance ? &*maps.affordance : nullptr;
  const ValueMap* avo = maps.avoidance ? &*maps.avoidance : nullptr;
  ctx.cost = compose_cost(aff, avo, cfg.weights);
  const std::size_t n = ctx.cost.spec.voxel_count();
  ctx.aff_norm = aff ? minmax_normalize(aff->data()) : std::vector<double>(n, 0.0);
  ctx.avoid_norm = avo ? minmax_normalize(avo->data()) : std::vector<double>(n, 0.0);
  ctx.blocked.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (ctx.avoid_norm[i] > cfg.collision_threshold) ctx.blocked[i] = 1;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto& o = s.objects[i];
    if (!sim::detail::is_blocker(o) || detail::is_self(o, maps.entity)) continue;
    if (s.grasp && s.grasp->object == static_cast<int>(i)) continue;
    detail::block_box(ctx.blocked, ctx.cost.spec, sim::box_of(o));
  }
  return ctx;
}

/// Steepest 26-neighbour descent. Only strictly lower, collision-free
/// neighbours are taken; equal costs keep the lexicographically first offset.
inline std::vector<VoxelIndex> greedy_path(const CostMap& cost, const VoxelIndex& start, const PlannerConfig& cfg,
                                           const std::vector<unsigned char>* blocked = nullptr) {
  const GridSpec& spec = cost.spec;
  if (!spec.contains(start)) fail(ErrorKind::invalid_input, "greedy_path: start out of bounds");
  auto is_blocked = [&](const VoxelIndex& v) { return blocked && (*blocked)[spec.linear(v)]; };
  if (is_blocked(start)) fail(ErrorKind::infeasible_start, "greedy_path: start voxel is in collision");
  std::vector<VoxelIndex> path{start};
  VoxelIndex cur = start;
  while (static_cast<int>(path.size()) < cfg.n_max) {
    double best = cost.at(cur);
    std::optional<VoxelIndex> next;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          if (!dx && !dy && !dz) continue;
          const VoxelIndex v{cur.x + dx, cur.y + dy, cur.z + dz};
          if (!spec.contains(v) || is_blocked(v)) continue;
          const double c = cost.at(v);
          if (c < best) {
            best = c;
            next = v;
          }
        }
    if (!next) break;
    cur = *next;
    path.push_back(cur);
  }
  return path;
}

/// Attaches rotation, speed and gripper from the remaining maps. Rotation
/// changes are spread over several waypoints at most `max_turn` apart.
inline Trajectory parametrize(const std::vector<VoxelIndex>& path, const lmp::MapSet& maps, const PoseDefaults& pose,
                              const GridSpec& spec, double max_turn = 0.2) {
  if (path.empty()) fail(ErrorKind::invalid_input, "parametrize: empty path");
  Trajectory t;
  t.entity = maps.entity;
  t.voxels = path;
  Quat prev = pose.rotation.normalized();
  for (const auto& v : path) {
    Waypoint w;
    w.position = voxel_to_world(v, spec);
    const Quat want = maps.rotation ? maps.rotation->rotation_at(v) : pose.rotation.normalized();
    const double ang = angle_between(prev, want);
    w.rotation = ang <= max_turn ? want : slerp(prev, want, max_turn / ang);
    prev = w.rotation;
    w.velocity_scale = maps.velocity ? maps.velocity->at(v) : 1.0;
    if (!(w.velocity_scale > 0.0)) w.velocity_scale = 1.0;
    w.gripper = maps.gripper ? (maps.gripper->at(v) >= 0.5 ? 1 : 0) : pose.gripper;
    t.waypoints.push_back(w);
  }
  return t;
}

inline double path_length(const Trajectory& t) {
  double len = 0.0;
  for (std::size_t i = 1; i < t.waypoints.size(); ++i)
    len += distance(t.waypoints[i - 1].position, t.waypoints[i].position);
  return len;
}

inline double rotation_effort(const Trajectory& t) {
  double r = 0.0;
  for (std::size_t i = 1; i < t.waypoints.size(); ++i)
    r += angle_between(t.waypoints[i - 1].rotation, t.waypoints[i].rotation);
  return r;
}

/// Sum of composed cost over the visited voxels plus control effort.
inline double score_trajectory(const Trajectory& t, const PlanContext& ctx, const PlannerConfig& cfg) {
  double task = 0.0;
  for (const auto& v : t.voxels) {
    if (!ctx.spec().contains(v)) fail(ErrorKind::invalid_input, "score_trajectory: voxel out of bounds");
    task += ctx.cost.at(v);
  }
  return task + cfg.lambda_len * path_length(t) + cfg.lambda_rot * rotation_effort(t);
}

struct Plan {
  Trajectory trajectory;
  double score = 0.0;
  double greedy_score = 0.0;
  double mean_score = 0.0;
  int candidates = 0;
};

/// Random shooting around the greedy path. Candidate 0 is the greedy path;
/// the others jitter each waypoint and are repaired to stay connected and
/// collision-free. Ties go to the lower candidate index.
inline Plan sample_and_score(const PlanContext& ctx, const VoxelIndex& start, const PoseDefaults& pose,
                             const PlannerConfig& cfg, std::uint64_t seed, bool ignore_collisions = false) {
  const GridSpec& spec = ctx.spec();
  const auto greedy = greedy_path(ctx.cost, start, cfg, ignore_collisions ? nullptr : &ctx.blocked);
  auto free = [&](const VoxelIndex& v) { return spec.contains(v) && (ignore_collisions || !ctx.blocked[spec.linear(v)]); };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::max(cfg.noise_sigma, 0.0));

  Plan best;
  double sum = 0.0;
  int valid = 0;
  const int m = std::max(1, cfg.samples);
  for (int c = 0; c < m; ++c) {
    std::vector<VoxelIndex> path = greedy;
    if (c > 0 && cfg.noise_sigma > 0.0) {
      for (std::size_t i = 1; i < path.size(); ++i) {
        VoxelIndex v;
        for (int a = 0; a < 3; ++a)
          v[a] = static_cast<int>(std::lround(greedy[i][a] + noise(rng)));
        v = spec.clamp(v);
        const VoxelIndex& prev = path[i - 1];
        for (int a = 0; a < 3; ++a) v[a] = std::clamp(v[a], prev[a] - 1, prev[a] + 1);
        if (!free(v)) {
          const VoxelIndex g = greedy[i];
          const bool adjacent =
              std::abs(g.x - prev.x) <= 1 && std::abs(g.y - prev.y) <= 1 && std::abs(g.z - prev.z) <= 1;
          v = adjacent && free(g) ? g : prev;
        }
        path[i] = v;
      }
    }
    if (!std::all_of(path.begin(), path.end(), free)) continue;
    Trajectory t = parametrize(path, *ctx.maps, pose, spec, cfg.max_turn);
    const double sc = score_trajectory(t, ctx, cfg);
    sum += sc;
    ++valid;
    if (c == 0) best.greedy_score = sc;
    if (valid == 1 || sc < best.score) {
      best.score = sc;
      best.trajectory = std::move(t);
    }
  }
  if (valid == 0) fail(ErrorKind::planning_infeasible, "every sampled trajectory is in collision");
  best.candidates = valid;
  best.mean_score = sum / valid;
  return best;
}

// ---------------------------------------------------------------------------
// Model predictive control for the end-effector

using MapClosure = std::function<lmp::MapSet(const WorldState&)>;
using StopCheck = std::function<bool(const WorldState&)>;

struct ReplanRecord {
  long tick = 0;
  VoxelIndex start{}, terminal{};
  double score = 0.0, greedy_score = 0.0, mean_score = 0.0;
  int candidates = 0;
  std::size_t length = 0;
  bool escape = false;
};

struct StepResult {
  std::vector<Waypoint> executed;
  Plan plan;
  ReplanRecord record;
  bool arrived = false;
  /// Plan with a single waypoint: nowhere better to go.
  bool stalled = false;
};

inline bool at_affordance_peak(const PlanContext& ctx, const VoxelIndex& v) {
  return ctx.aff_norm[ctx.spec().linear(v)] >= 1.0 - 1e-12;
}

inline double scalar_at(const std::optional<ValueMap>& m, const VoxelIndex& v, double fallback) {
  return m ? m->at(v) : fallback;
}

/// Re-evaluates the maps on `s`, plans, and executes up to one replan
/// interval of the plan. At the affordance peak it issues one in-place
/// tick so the gripper map takes effect, and reports arrival.
inline StepResult mpc_step(WorldState& s, const MapClosure& maps_of, const PlannerConfig& cfg, std::uint64_t seed) {
  StepResult out;
  const lmp::MapSet maps = maps_of(s);
  const PlanContext ctx = make_context(maps, s, cfg);
  const GridSpec& spec = s.spec;
  const VoxelIndex start = spec.clamp(world_to_voxel(spec.clamp(s.ee_position), spec));
  const PoseDefaults pose{s.ee_rotation, s.gripper};

  auto tick_at_current = [&](const Waypoint& target) {
    const VoxelIndex here = spec.clamp(world_to_voxel(spec.clamp(s.ee_position), spec));
    Waypoint w = target;
    w.gripper = maps.gripper ? (maps.gripper->at(here) >= 0.5 ? 1 : 0) : s.gripper;
    w.velocity_scale = scalar_at(maps.velocity, here, 1.0);
    if (!(w.velocity_scale > 0.0)) w.velocity_scale = 1.0;
    sim::step_waypoint_inplace(s, w);
    out.executed.push_back(w);
  };

  if (at_affordance_peak(ctx, start)) {
    out.arrived = true;
    out.record = {s.tick, start, start, 0, 0, 0, 0, 1, false};
    tick_at_current({s.ee_position, s.ee_rotation, 1.0, s.gripper});
    return out;
  }

  const bool escape = ctx.collides(start);
  out.plan = sample_and_score(ctx, start, pose, cfg, seed, escape);
  const Trajectory& traj = out.plan.trajectory;
  out.record = {s.tick, start, traj.voxels.back(), out.plan.score, out.plan.greedy_score, out.plan.mean_score,
                out.plan.candidates, traj.voxels.size(), escape};
  if (traj.waypoints.size() <= 1) {
    out.stalled = true;
    tick_at_current({s.ee_position, s.ee_rotation, 1.0, s.gripper});
    return out;
  }

  // Follow the path: each tick aims at the first waypoint beyond the speed
  // cap, so the simulator truncates the move to exactly one cap.
  std::size_t j = 0;
  for (int k = 0; k < cfg.replan_interval; ++k) {
    const VoxelIndex here = spec.clamp(world_to_voxel(spec.clamp(s.ee_position), spec));
    double scale = scalar_at(maps.velocity, here, 1.0);
    if (!(scale > 0.0)) scale = 1.0;
    const double cap = sim::kVmax * scale;
    while (j + 1 < traj.waypoints.size() && distance(s.ee_position, traj.waypoints[j].position) <= cap) ++j;
    tick_at_current(traj.waypoints[j]);
    if (j + 1 == traj.waypoints.size() && distance(s.ee_position, traj.waypoints[j].position) < 1e-9) break;
  }
  return out;
}

struct MpcResult {
  bool success = false;
  bool arrived = false;
  long ticks = 0;
  int replans = 0;
  std::string stop_reason;
  std::vector<Waypoint> executed;
  std::vector<ReplanRecord> trace;
};

inline MpcResult run_mpc(WorldState& s, const MapClosure& maps_of, const StopCheck& done, const PlannerConfig& cfg,
                         std::uint64_t seed, long tick_limit) {
  MpcResult r;
  const long t0 = s.tick;
  int stalls = 0;
  while (true) {
    if (done && done(s)) {
      r.success = true;
      r.stop_reason = "success";
      break;
    }
    if (s.tick - t0 >= tick_limit) {
      r.stop_reason = "budget";
      break;
    }
    StepResult st = mpc_step(s, maps_of, cfg, seed + static_cast<std::uint64_t>(r.replans) * 7919u);
    ++r.replans;
    r.trace.push_back(st.record);
    r.executed.insert(r.executed.end(), st.executed.begin(), st.executed.end());
    if (st.arrived) {
      r.arrived = true;
      r.success = done ? done(s) : true;
      r.stop_reason = "arrived";
      break;
    }
    stalls = st.stalled ? stalls + 1 : 0;
    if (stalls >= cfg.stuck_limit) {
      r.stop_reason = "local_minimum";
      break;
    }
  }
  r.ticks = s.tick - t0;
  return r;
}

// ---------------------------------------------------------------------------
// Push optimization for object and part entities

inline std::vector<Vec3> detection_cloud(const sim::DetectionRecord& d, const GridSpec& spec) {
  std::vector<Vec3> out;
  out.reserve(d.occupancy.size());
  for (std::size_t i : d.occupancy) out.push_back(voxel_to_world(spec.unlinear(i), spec));
  return out;
}

inline Vec3 centroid(const std::vector<Vec3>& pts) {
  Vec3 c{};
  for (const auto& p : pts) c += p;
  return pts.empty() ? c : c / static_cast<double>(pts.size());
}

inline sim::DetectionRecord detect_entity(const WorldState& s, const lmp::EntityRef& e) {
  const auto d = sim::detect(s, e.name);
  if (d.empty() || d.front().occupancy.empty())
    fail(ErrorKind::perception_failure, "entity '" + e.name + "' is not detected");
  return d.front();
}

struct PushPlan {
  PushAction action;
  double score = 0.0;
  Vec3 predicted_center{};
  int candidates = 0;
};

/// Scores the predicted centre path: cost at the end, a penalty for every
/// path sample in collision, and a small distance term.
inline double score_push(const PlanContext& ctx, const Vec3& from, const Vec3& to, double dist, const PlannerConfig& cfg) {
  const GridSpec& spec = ctx.spec();
  const double vox = spec.voxel_size().x;
  const int n = std::max(1, static_cast<int>(std::ceil(dist / vox)));
  int hits = 0;
  for (int k = 1; k <= n; ++k) {
    const Vec3 p = from + (to - from) * (static_cast<double>(k) / n);
    if (!spec.contains(p) || ctx.collides(world_to_voxel(p, spec))) ++hits;
  }
  const VoxelIndex end = spec.clamp(world_to_voxel(spec.clamp(to), spec));
  return ctx.cost.at(end) + cfg.push_collision_penalty * hits / n + cfg.lambda_len * dist;
}

/// Random shooting over push parameters. Contacts lie on the vertical faces
/// of the detected box at the centre height; directions point into the face
/// within 45 degrees of its inward normal.
inline PushPlan optimize_push(const lmp::MapSet& maps, const WorldState& s, const dynamics::PushModel& model,
                              const PlannerConfig& cfg, std::uint64_t seed) {
  const sim::DetectionRecord det = detect_entity(s, maps.entity);
  const PlanContext ctx = make_context(maps, s, cfg);
  const std::vector<Vec3> cloud = detection_cloud(det, s.spec);
  const Vec3 c0 = centroid(cloud);
  const sim::Aabb& b = det.box;
  const double zc = std::clamp(det.center.z, 0.005, s.spec.world_max().z);

  struct Face {
    Vec3 normal;
    int axis;
    double at;
  };
  std::vector<Face> faces;
  const Face all[] = {{{-1, 0, 0}, 0, b.lo.x}, {{1, 0, 0}, 0, b.hi.x}, {{0, -1, 0}, 1, b.lo.y}, {{0, 1, 0}, 1, b.hi.y}};
  for (const auto& f : all) {
    Vec3 probe = det.center;
    probe[f.axis] = f.at;
    probe.z = zc;
    if (s.spec.contains(probe)) faces.push_back(f);
  }
  if (faces.empty()) fail(ErrorKind::planning_infeasible, "no reachable contact face on '" + det.name + "'");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  PushPlan best;
  const int m = std::max(1, cfg.push_samples);
  for (int k = 0; k < m; ++k) {
    const Face& f = faces[static_cast<std::size_t>(u01(rng) * faces.size()) % faces.size()];
    Vec3 contact;
    contact[f.axis] = f.at;
    const int other = 1 - f.axis;
    contact[other] = b.lo[other] + (b.hi[other] - b.lo[other]) * u01(rng);
    contact.z = zc;
    const double ang = (u01(rng) * 2.0 - 1.0) * std::numbers::pi / 4.0;
    const Vec3 in = f.normal * -1.0;
    const Vec3 dir{in.x * std::cos(ang) - in.y * std::sin(ang), in.x * std::sin(ang) + in.y * std::cos(ang), 0.0};
    const double dist = dynamics::kMaxPushDistance * (1.0 - u01(rng));
    const PushAction a{contact, vxp::normalized(dir), dist};
    const Vec3 c1 = centroid(model(cloud, a));
    const double sc = score_push(ctx, c0, c1, dist, cfg);
    if (k == 0 || sc < best.score) best = {a, sc, c1, 0};
  }
  best.candidates = m;
  return best;
}

struct PushRecord {
  long tick = 0;
  PushAction action;
  double score = 0.0;
  Vec3 predicted{}, observed{};
  bool contact_miss = false;
};

struct PushResult {
  bool success = false;
  long ticks = 0;
  int pushes = 0;
  double max_divergence = 0.0;
  std::string stop_reason;
  std::vector<PushRecord> trace;
};

inline PushResult run_push(WorldState& s, const MapClosure& maps_of, const StopCheck& done, const PlannerConfig& cfg,
                           std::uint64_t seed, long tick_limit, const dynamics::PushModel& model = dynamics::push_predict) {
  PushResult r;
  const long t0 = s.tick;
  const double vox = s.spec.voxel_size().x;
  // Maps are rebuilt only when the entity ends up away from where the model
  // put it. Targets defined relative to the entity itself (the far end of a
  // line) would otherwise flip once the entity passes the midpoint.
  std::optional<lmp::MapSet> maps;
  bool stale = false;
  while (true) {
    if (done && done(s)) {
      r.success = true;
      r.stop_reason = "success";
      break;
    }
    if (s.tick - t0 >= tick_limit) {
      r.stop_reason = "budget";
      break;
    }
    if (r.pushes >= cfg.max_pushes) {
      r.stop_reason = "push_limit";
      break;
    }
    if (!maps || stale) maps = maps_of(s);
    stale = false;
    const PushPlan p = optimize_push(*maps, s, model, cfg, seed + static_cast<std::uint64_t>(r.pushes) * 104729u);
    if (p.action.distance <= vox) {
      r.stop_reason = "satisfied";
      r.success = done ? done(s) : true;
      break;
    }
    const auto out = sim::apply_push_inplace(s, p.action.contact, p.action.direction, p.action.distance);
    ++r.pushes;
    PushRecord rec{s.tick, p.action, p.score, p.predicted_center, {}, out.contact_miss};
    const auto d = sim::detect(s, maps->entity.name);
    if (!d.empty() && !d.front().occupancy.empty()) {
      rec.observed = centroid(detection_cloud(d.front(), s.spec));
      const double gap = distance(rec.observed, rec.predicted);
      r.max_divergence = std::max(r.max_divergence, gap);
      stale = gap > cfg.divergence_threshold;
    } else {
      stale = true;
    }
    r.trace.push_back(rec);
  }
  r.ticks = s.tick - t0;
  return r;
}

}  // namespace vxp::planner
