#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vxp/planner/planner.hpp"
#include "vxp/voxel/distance_transform.hpp"
#include "vxp/voxel/smoothing.hpp"

using namespace vxp;
using namespace vxp::planner;

namespace {

GridSpec cube(int n) { return GridSpec({n, n, n}, {0, 0, 0}, {0.01 * n, 0.01 * n, 0.01 * n}); }

CostMap cost_of(const GridSpec& spec, std::vector<double> data) { return CostMap{spec, std::move(data), {}}; }

ValueMap target_affordance(const GridSpec& spec, const VoxelIndex& t) {
  ValueMap m = empty_map(MapKind::affordance, spec);
  m.at(t) = 1.0;
  return densify_affordance(m);
}

lmp::MapSet maps_with(ValueMap aff) {
  lmp::MapSet m;
  m.affordance = std::move(aff);
  m.entity = {lmp::EntityRef::Kind::end_effector, "gripper", "gripper"};
  return m;
}

sim::WorldState empty_world(const GridSpec& spec, Vec3 ee) {
  sim::WorldState s;
  s.spec = spec;
  s.ee_position = ee;
  return s;
}

bool adjacent(const VoxelIndex& a, const VoxelIndex& b) {
  return std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1 && std::abs(a.z - b.z) <= 1;
}

/// Random affordance and avoidance maps on an n³ grid.
lmp::MapSet random_maps(const GridSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ValueMap aff = empty_map(MapKind::affordance, spec);
  ValueMap avo = empty_map(MapKind::avoidance, spec);
  for (double& v : aff.data()) v = u(rng);
  for (double& v : avo.data()) v = u(rng) < 0.15 ? 1.0 : 0.2 * u(rng);
  lmp::MapSet m = maps_with(std::move(aff));
  m.avoidance = std::move(avo);
  return m;
}

}  // namespace

// greedy_path ------------------------------------------------------------------

TEST(Greedy, StartAtMinimumIsLengthOne) {
  const GridSpec spec = cube(5);
  const ValueMap aff = target_affordance(spec, {2, 2, 2});
  const CostMap c = compose_cost(&aff, nullptr);
  EXPECT_EQ(greedy_path(c, {2, 2, 2}, PlannerConfig{}).size(), 1u);
}

TEST(Greedy, RampCorridorVisitsEveryVoxel) {
  const GridSpec spec({5, 1, 1}, {0, 0, 0}, {0.05, 0.01, 0.01});
  const CostMap c = cost_of(spec, {0, 1, 2, 3, 4});
  const auto p = greedy_path(c, {4, 0, 0}, PlannerConfig{});
  ASSERT_EQ(p.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(p[i], (VoxelIndex{4 - i, 0, 0}));
}

TEST(Greedy, EqualNeighboursTakeSmallestOffset) {
  const GridSpec spec = cube(3);
  std::vector<double> d(spec.voxel_count(), 0.0);
  d[spec.linear({0, 1, 1})] = -1.0;
  d[spec.linear({2, 1, 1})] = -1.0;
  d[spec.linear({1, 2, 1})] = -1.0;
  const auto p = greedy_path(cost_of(spec, d), {1, 1, 1}, PlannerConfig{});
  ASSERT_GE(p.size(), 2u);
  EXPECT_EQ(p[1], (VoxelIndex{0, 1, 1}));
}

TEST(Greedy, HorizonCapsLength) {
  const GridSpec spec({30, 1, 1}, {0, 0, 0}, {0.3, 0.01, 0.01});
  std::vector<double> d(30);
  for (int i = 0; i < 30; ++i) d[i] = i;
  PlannerConfig cfg;
  cfg.n_max = 10;
  EXPECT_EQ(greedy_path(cost_of(spec, d), {29, 0, 0}, cfg).size(), 10u);
}

TEST(Greedy, NonIncreasingAdjacentAndCollisionFree) {
  std::mt19937_64 rng(7);
  const GridSpec spec = cube(12);
  PlannerConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const lmp::MapSet maps = random_maps(spec, rng);
    const PlanContext ctx = make_context(maps, empty_world(spec, {0.06, 0.06, 0.06}), cfg);
    std::uniform_int_distribution<int> ui(0, 11);
    VoxelIndex start{ui(rng), ui(rng), ui(rng)};
    if (ctx.collides(start)) continue;
    const auto p = greedy_path(ctx.cost, start, cfg, &ctx.blocked);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_FALSE(ctx.collides(p[i]));
      if (i == 0) continue;
      EXPECT_TRUE(adjacent(p[i - 1], p[i]));
      EXPECT_LT(ctx.cost.at(p[i]), ctx.cost.at(p[i - 1]));
    }
  }
}

TEST(Greedy, StartInCollisionIsInfeasible) {
  const GridSpec spec = cube(4);
  const CostMap c = cost_of(spec, std::vector<double>(spec.voxel_count(), 0.0));
  std::vector<unsigned char> blocked(spec.voxel_count(), 0);
  blocked[spec.linear({1, 1, 1})] = 1;
  try {
    greedy_path(c, {1, 1, 1}, PlannerConfig{}, &blocked);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible_start);
  }
}

// parametrize ---------------------------------------------------------------------

TEST(Parametrize, DefaultMapsKeepThePose) {
  const GridSpec spec = cube(6);
  const lmp::MapSet maps = maps_with(target_affordance(spec, {5, 5, 5}));
  const Quat q = Quat{0.9, 0.1, 0.3, 0.2}.normalized();
  const std::vector<VoxelIndex> path{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  const Trajectory t = parametrize(path, maps, {q, 1}, spec);
  ASSERT_EQ(t.waypoints.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(t.waypoints[i].position, voxel_to_world(path[i], spec));
    EXPECT_LT(angle_between(t.waypoints[i].rotation, q), 1e-12);
    EXPECT_EQ(t.waypoints[i].velocity_scale, 1.0);
    EXPECT_EQ(t.waypoints[i].gripper, 1);
  }
}

TEST(Parametrize, QuarterSpeedRegion) {
  const GridSpec spec = cube(10);
  lmp::MapSet maps = maps_with(target_affordance(spec, {9, 0, 0}));
  ValueMap vel = empty_map(MapKind::velocity, spec);
  set_voxel_by_box(vel, {5, 0, 0}, {9, 9, 9}, {0.25});
  maps.velocity = vel;
  std::vector<VoxelIndex> path;
  for (int x = 0; x < 10; ++x) path.push_back({x, 0, 0});
  const Trajectory t = parametrize(path, maps, {Quat{}, 0}, spec);
  for (int x = 0; x < 10; ++x) EXPECT_EQ(t.waypoints[x].velocity_scale, x >= 5 ? 0.25 : 1.0);
}

TEST(Parametrize, GripperClosesAtTheLastWaypointOnly) {
  const GridSpec spec = cube(6);
  lmp::MapSet maps = maps_with(target_affordance(spec, {4, 0, 0}));
  ValueMap g = empty_map(MapKind::gripper, spec, PoseDefaults{Quat{}, 0});
  g.at({4, 0, 0}) = 1.0;
  maps.gripper = g;
  const std::vector<VoxelIndex> path{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}};
  const Trajectory t = parametrize(path, maps, {Quat{}, 0}, spec);
  for (std::size_t i = 0; i < path.size(); ++i) EXPECT_EQ(t.waypoints[i].gripper, i + 1 == path.size() ? 1 : 0);
}

TEST(Parametrize, RotationStepsAreRateLimited) {
  const GridSpec spec = cube(8);
  lmp::MapSet maps = maps_with(target_affordance(spec, {7, 0, 0}));
  const Quat target = rotation_between({0, 0, -1}, {1, 0, 0});
  ValueMap rot = empty_map(MapKind::rotation, spec, PoseDefaults{Quat{}, 0});
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) rot.set(spec.unlinear(i), {0.0, target});
  maps.rotation = rot;
  std::vector<VoxelIndex> path;
  for (int x = 0; x < 8; ++x) path.push_back({x, 0, 0});
  const Trajectory t = parametrize(path, maps, {Quat{}, 0}, spec, 0.2);
  Quat prev{};
  for (const auto& w : t.waypoints) {
    EXPECT_LE(angle_between(prev, w.rotation), 0.2 + 1e-9);
    EXPECT_NEAR(w.rotation.norm(), 1.0, 1e-12);
    prev = w.rotation;
  }
  EXPECT_LT(angle_between(t.waypoints.back().rotation, target), 1e-6);
}

// score_trajectory -----------------------------------------------------------------

TEST(Score, ZeroLengthAtPeakIsMinusAffordanceWeight) {
  const GridSpec spec = cube(6);
  const lmp::MapSet maps = maps_with(target_affordance(spec, {3, 3, 3}));
  PlannerConfig cfg;
  const PlanContext ctx = make_context(maps, empty_world(spec, {0.035, 0.035, 0.035}), cfg);
  const Trajectory t = parametrize({{3, 3, 3}}, maps, {}, spec);
  EXPECT_DOUBLE_EQ(score_trajectory(t, ctx, cfg), -cfg.weights.affordance);
}

TEST(Score, LongerPathOverSameValuesScoresWorse) {
  const GridSpec spec({20, 1, 1}, {0, 0, 0}, {0.2, 0.01, 0.01});
  lmp::MapSet maps = maps_with(empty_map(MapKind::affordance, spec));
  maps.affordance->at({0, 0, 0}) = 1.0;
  PlannerConfig cfg;
  const PlanContext ctx = make_context(maps, empty_world(spec, {0.005, 0.005, 0.005}), cfg);
  // Both paths see only zero-affordance voxels, five of them each.
  const Trajectory short_t = parametrize({{5, 0, 0}, {6, 0, 0}, {7, 0, 0}, {7, 0, 0}, {7, 0, 0}}, maps, {}, spec);
  const Trajectory long_t = parametrize({{5, 0, 0}, {6, 0, 0}, {7, 0, 0}, {8, 0, 0}, {9, 0, 0}}, maps, {}, spec);
  EXPECT_NEAR(path_length(long_t), 2 * path_length(short_t), 1e-12);
  EXPECT_GT(score_trajectory(long_t, ctx, cfg), score_trajectory(short_t, ctx, cfg));
}

TEST(Score, MatchesDirectResummation) {
  std::mt19937_64 rng(11);
  const GridSpec spec = cube(10);
  PlannerConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    lmp::MapSet maps = random_maps(spec, rng);
    ValueMap rot = empty_map(MapKind::rotation, spec, PoseDefaults{Quat{}, 0});
    std::normal_distribution<double> n01;
    for (std::size_t i = 0; i < spec.voxel_count(); ++i)
      rot.set(spec.unlinear(i), {0.0, Quat{n01(rng), n01(rng), n01(rng), n01(rng)}.normalized()});
    maps.rotation = rot;
    const PlanContext ctx = make_context(maps, empty_world(spec, {0.05, 0.05, 0.05}), cfg);
    std::uniform_int_distribution<int> ui(-1, 1);
    std::vector<VoxelIndex> path{{5, 5, 5}};
    for (int k = 0; k < 12; ++k) path.push_back(spec.clamp(path.back() + VoxelIndex{ui(rng), ui(rng), ui(rng)}));
    const Trajectory t = parametrize(path, maps, {}, spec);

    // Independent recomputation from raw maps: normalize, weight, sum.
    const auto a = maps.affordance->data();
    const auto v = maps.avoidance->data();
    const auto [alo, ahi] = std::minmax_element(a.begin(), a.end());
    const auto [vlo, vhi] = std::minmax_element(v.begin(), v.end());
    double expect = 0.0;
    for (const auto& p : path) {
      const std::size_t i = spec.linear(p);
      expect += -2.0 * (a[i] - *alo) / (*ahi - *alo) + 1.0 * (v[i] - *vlo) / (*vhi - *vlo);
    }
    for (std::size_t i = 1; i < t.waypoints.size(); ++i) {
      const Vec3 d = t.waypoints[i].position - t.waypoints[i - 1].position;
      expect += 0.1 * std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
      const Quat& q0 = t.waypoints[i - 1].rotation;
      const Quat& q1 = t.waypoints[i].rotation;
      const double c = std::abs(q0.w * q1.w + q0.x * q1.x + q0.y * q1.y + q0.z * q1.z);
      expect += 0.01 * 2.0 * std::acos(std::min(1.0, c));
    }
    EXPECT_NEAR(score_trajectory(t, ctx, cfg), expect, 1e-9);
  }
}

// sample_and_score ---------------------------------------------------------------

TEST(Sample, ZeroNoiseReturnsTheGreedyPath) {
  std::mt19937_64 rng(3);
  const GridSpec spec = cube(10);
  PlannerConfig cfg;
  cfg.noise_sigma = 0.0;
  const lmp::MapSet maps = random_maps(spec, rng);
  const PlanContext ctx = make_context(maps, empty_world(spec, {0.05, 0.05, 0.05}), cfg);
  VoxelIndex start{0, 0, 0};
  while (ctx.collides(start)) ++start.x;
  const Plan p = sample_and_score(ctx, start, {}, cfg, 99);
  EXPECT_EQ(p.trajectory.voxels, greedy_path(ctx.cost, start, cfg, &ctx.blocked));
  EXPECT_EQ(p.score, p.greedy_score);
}

TEST(Sample, NeverWorseThanGreedyAndBoundedByExhaustiveSearch) {
  std::mt19937_64 rng(5);
  const GridSpec spec = cube(8);
  PlannerConfig cfg;
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const lmp::MapSet maps = random_maps(spec, rng);
    const PlanContext ctx = make_context(maps, empty_world(spec, {0.04, 0.04, 0.04}), cfg);
    std::uniform_int_distribution<int> ui(0, 7);
    const VoxelIndex start{ui(rng), ui(rng), ui(rng)};
    if (ctx.collides(start)) continue;
    const Plan p = sample_and_score(ctx, start, {}, cfg, 1000 + trial);
    EXPECT_LE(p.score, p.greedy_score);
    for (const auto& v : p.trajectory.voxels) EXPECT_FALSE(ctx.collides(v));
    for (std::size_t i = 1; i < p.trajectory.voxels.size(); ++i)
      EXPECT_TRUE(adjacent(p.trajectory.voxels[i - 1], p.trajectory.voxels[i]));

    std::vector<unsigned char> free(spec.voxel_count());
    for (std::size_t i = 0; i < free.size(); ++i) free[i] = !ctx.blocked[i];
    const double bound = oracle::min_path_cost(ctx.cost.data, free, spec, start, p.trajectory.voxels.size());
    const double control = cfg.lambda_len * path_length(p.trajectory) + cfg.lambda_rot * rotation_effort(p.trajectory);
    EXPECT_GE(p.score - control, bound - 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Sample, DeterministicForAFixedSeed) {
  std::mt19937_64 rng(8);
  const GridSpec spec = cube(10);
  PlannerConfig cfg;
  const lmp::MapSet maps = random_maps(spec, rng);
  const PlanContext ctx = make_context(maps, empty_world(spec, {0.05, 0.05, 0.05}), cfg);
  VoxelIndex start{1, 1, 1};
  while (ctx.collides(start)) ++start.y;
  const Plan a = sample_and_score(ctx, start, {}, cfg, 42);
  const Plan b = sample_and_score(ctx, start, {}, cfg, 42);
  EXPECT_EQ(a.trajectory.voxels, b.trajectory.voxels);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.mean_score, b.mean_score);
}

TEST(Sample, BlockerBoxesAreAvoided) {
  const GridSpec spec;
  sim::WorldState s = empty_world(spec, {0.30, 0.50, 0.025});
  s.objects.push_back(sim::make_block("red", 0.5, 0.5));
  const lmp::MapSet maps = maps_with(target_affordance(spec, world_to_voxel({0.7, 0.5, 0.025}, spec)));
  const PlanContext ctx = make_context(maps, s, PlannerConfig{});
  const Plan p = sample_and_score(ctx, world_to_voxel(s.ee_position, spec), {}, PlannerConfig{}, 1);
  const sim::Aabb box = sim::box_of(s.objects[0]);
  for (const auto& w : p.trajectory.waypoints) EXPECT_FALSE(box.contains(w.position, -1e-9));
}

// MPC ------------------------------------------------------------------------------

namespace {

/// Affordance at a fixed offset above the first object's centre.
MapClosure above_first_object(const GridSpec& spec) {
  return [spec](const sim::WorldState& s) {
    const Vec3 goal = sim::box_center(s.objects[0]) + Vec3{0, 0, 0.10};
    return maps_with(target_affordance(spec, world_to_voxel(goal, spec)));
  };
}

}  // namespace

TEST(Mpc, AlreadyAtThePeakStopsAfterOneTick) {
  const GridSpec spec;
  sim::WorldState s = empty_world(spec, {0.405, 0.605, 0.125});
  s.objects.push_back(sim::make_block("blue", 0.4, 0.6));
  const MpcResult r = run_mpc(s, above_first_object(spec), {}, PlannerConfig{}, 1, 600);
  EXPECT_TRUE(r.arrived);
  EXPECT_EQ(r.replans, 1);
  EXPECT_EQ(r.ticks, 1);
}

TEST(Mpc, ReachesTheTargetWithinTheCap) {
  const GridSpec spec;
  sim::WorldState s = empty_world(spec, sim::kRestPosition);
  s.objects.push_back(sim::make_block("blue", 0.2, 0.8));
  const Vec3 before = s.ee_position;
  const MpcResult r = run_mpc(s, above_first_object(spec), {}, PlannerConfig{}, 1, 600);
  EXPECT_TRUE(r.arrived);
  EXPECT_LT(distance(s.ee_position, sim::box_center(s.objects[0]) + Vec3{0, 0, 0.10}), 0.01);
  Vec3 prev = before;
  for (const auto& rec : s.history) {
    EXPECT_LE(distance(rec.ee, prev), sim::kVmax + 1e-9);
    prev = rec.ee;
  }
}

TEST(Mpc, QuarterSpeedMapSlowsEveryTick) {
  const GridSpec spec;
  sim::WorldState s = empty_world(spec, sim::kRestPosition);
  s.objects.push_back(sim::make_block("blue", 0.3, 0.5));
  const MapClosure maps = [spec](const sim::WorldState& w) {
    lmp::MapSet m = above_first_object(spec)(w);
    ValueMap vel = empty_map(MapKind::velocity, spec);
    std::fill(vel.data().begin(), vel.data().end(), 0.25);
    m.velocity = vel;
    return m;
  };
  Vec3 prev = s.ee_position;
  const MpcResult r = run_mpc(s, maps, {}, PlannerConfig{}, 3, 600);
  EXPECT_TRUE(r.arrived);
  for (const auto& w : r.executed) EXPECT_EQ(w.velocity_scale, 0.25);
  for (const auto& rec : s.history) {
    EXPECT_LE(distance(rec.ee, prev), 0.25 * sim::kVmax + 1e-9);
    prev = rec.ee;
  }
}

TEST(Mpc, NextPlanTracksADisplacedTarget) {
  const GridSpec spec;
  sim::WorldState s = empty_world(spec, sim::kRestPosition);
  s.objects.push_back(sim::make_block("blue", 0.2, 0.2));
  const MapClosure maps = above_first_object(spec);
  PlannerConfig cfg;
  mpc_step(s, maps, cfg, 1);
  s.objects[0].position.x = 0.75;
  s.objects[0].position.y = 0.70;
  const StepResult st = mpc_step(s, maps, cfg, 2);
  const ValueMap aff = *maps(s).affordance;
  const auto it = std::max_element(aff.data().begin(), aff.data().end());
  const VoxelIndex peak = spec.unlinear(static_cast<std::size_t>(it - aff.data().begin()));
  EXPECT_EQ(st.record.terminal, peak);
}

TEST(Mpc, FixedSeedGivesAnIdenticalWaypointStream) {
  const GridSpec spec;
  auto once = [&] {
    sim::WorldState s = empty_world(spec, sim::kRestPosition);
    s.objects.push_back(sim::make_block("blue", 0.8, 0.3));
    s.objects.push_back(sim::make_block("red", 0.65, 0.4));
    return run_mpc(s, above_first_object(spec), {}, PlannerConfig{}, 17, 600).executed;
  };
  const auto a = once();
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, once());
}

TEST(Mpc, GripperClosesOnArrival) {
  const GridSpec spec;
  sim::WorldState s = empty_world(spec, sim::kRestPosition);
  s.objects.push_back(sim::make_block("blue", 0.6, 0.6));
  const MapClosure maps = [spec](const sim::WorldState& w) {
    const VoxelIndex top = world_to_voxel(sim::box_center(w.objects[0]) + Vec3{0, 0, 0.03}, spec);
    lmp::MapSet m = maps_with(target_affordance(spec, top));
    ValueMap g = empty_map(MapKind::gripper, spec, PoseDefaults{w.ee_rotation, w.gripper});
    g.at(top) = 1.0;
    m.gripper = g;
    return m;
  };
  const MpcResult r = run_mpc(s, maps, {}, PlannerConfig{}, 5, 600);
  EXPECT_TRUE(r.arrived);
  EXPECT_EQ(s.gripper, 1);
  ASSERT_TRUE(s.grasp.has_value());
  EXPECT_EQ(s.grasp->object, 0);
}

// Push optimization ----------------------------------------------------------------

namespace {

sim::WorldState block_world(Vec3 at) {
  sim::WorldState s = empty_world(GridSpec{}, sim::kRestPosition);
  s.objects.push_back(sim::make_block("blue", at.x, at.y));
  return s;
}

lmp::MapSet push_maps(const GridSpec& spec, const Vec3& goal) {
  lmp::MapSet m = maps_with(target_affordance(spec, world_to_voxel(goal, spec)));
  m.entity = {lmp::EntityRef::Kind::object, "blue block", "blue block"};
  return m;
}

}  // namespace

TEST(Push, DirectionPointsAtTheGoal) {
  const sim::WorldState s = block_world({0.4, 0.5, 0});
  const lmp::MapSet maps = push_maps(s.spec, {0.6, 0.5, 0.025});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PushPlan p = optimize_push(maps, s, dynamics::push_predict, PlannerConfig{}, seed);
    EXPECT_GE(dot(p.action.direction, Vec3{1, 0, 0}), std::cos(std::numbers::pi / 4) - 1e-9);
    EXPECT_NO_THROW(dynamics::check_push(p.action));
  }
}

TEST(Push, SatisfiedGoalGivesAVoxelOrLess) {
  const sim::WorldState s = block_world({0.4, 0.5, 0});
  const sim::DetectionRecord d = detect_entity(s, {lmp::EntityRef::Kind::object, "blue block", "blue block"});
  const Vec3 c = centroid(detection_cloud(d, s.spec));
  const PushPlan p = optimize_push(push_maps(s.spec, c), s, dynamics::push_predict, PlannerConfig{}, 3);
  EXPECT_LE(p.action.distance, s.spec.voxel_size().x);
}

TEST(Push, PredictedPathClearsAnAvoidanceWall) {
  const sim::WorldState s = block_world({0.4, 0.5, 0});
  lmp::MapSet maps = push_maps(s.spec, {0.7, 0.5, 0.025});
  ValueMap wall = empty_map(MapKind::avoidance, s.spec);
  set_voxel_by_box(wall, {52, 44, 0}, {54, 56, 99}, {1.0});
  maps.avoidance = smooth_avoidance(wall);
  PlannerConfig cfg;
  const PlanContext ctx = make_context(maps, s, cfg);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PushPlan p = optimize_push(maps, s, dynamics::push_predict, cfg, seed);
    const sim::DetectionRecord d = detect_entity(s, maps.entity);
    const Vec3 c0 = centroid(detection_cloud(d, s.spec));
    for (int k = 1; k <= 40; ++k) {
      const Vec3 q = c0 + (p.predicted_center - c0) * (k / 40.0);
      EXPECT_FALSE(ctx.collides(world_to_voxel(q, s.spec))) << "seed " << seed;
    }
  }
}

TEST(Push, MissingEntityIsAPerceptionFailure) {
  const sim::WorldState s = block_world({0.4, 0.5, 0});
  lmp::MapSet maps = push_maps(s.spec, {0.6, 0.5, 0.025});
  maps.entity.name = "green block";
  try {
    optimize_push(maps, s, dynamics::push_predict, PlannerConfig{}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::perception_failure);
  }
}

TEST(Push, ClosedLoopReachesTheGoal) {
  sim::WorldState s = block_world({0.3, 0.4, 0});
  const Vec3 goal{0.65, 0.6, 0.025};
  const MapClosure maps = [&](const sim::WorldState&) { return push_maps(s.spec, goal); };
  const StopCheck done = [&](const sim::WorldState& w) {
    const Vec3 c = sim::box_center(w.objects[0]);
    return std::hypot(c.x - goal.x, c.y - goal.y) <= 0.02;
  };
  const PushResult r = run_push(s, maps, done, PlannerConfig{}, 4, 600);
  EXPECT_TRUE(r.success) << r.stop_reason;
  EXPECT_LT(r.max_divergence, 0.03);
}
