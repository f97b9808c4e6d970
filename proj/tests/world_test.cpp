#include <gtest/gtest.h>

#include <set>

#include "vxp/sim/tasks.hpp"

using namespace vxp;
using namespace vxp::sim;

namespace {

WorldState empty_world() {
  WorldState s;
  s.ee_position = {0.5, 0.5, 0.35};
  return s;
}

Waypoint hold(const WorldState& s) { return {s.ee_position, s.ee_rotation, 1.0, s.gripper}; }

}  // namespace

TEST(Reset, SameSeedSameState) {
  for (const auto& info : templates()) {
    const TaskSpec t = make_task(info.id, Split::seen, 3);
    EXPECT_TRUE(reset(t, 7) == reset(t, 7)) << info.id;
  }
}

TEST(Reset, NeighbouringSeedsDiffer) {
  const TaskSpec t = make_task("push_to_pos", Split::seen, 0);
  const auto a = reset(t, 1), b = reset(t, 2);
  EXPECT_NE(a.object(t.at("obj")).position, b.object(t.at("obj")).position);
}

TEST(Reset, EveryTemplateSamplesAcrossSeeds) {
  for (const auto& info : templates())
    for (Split split : {Split::seen, Split::unseen})
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TaskSpec t = make_task(info.id, split, seed);
        WorldState s;
        ASSERT_NO_THROW(s = reset(t, seed)) << t.instruction();
        EXPECT_FALSE(success_check(t, s)) << t.instruction();
      }
}

TEST(Reset, CloseDrawerStartsOpen) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TaskSpec t = make_task("close_drawer", Split::seen, seed);
    const auto s = reset(t, seed);
    EXPECT_GT(s.object(drawer_name(t.at("deixis"))).joint.q, 0.05 * 0.2);
  }
}

TEST(Detect, InstancesPartsAndMisses) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.2, 0.2));
  s.objects.push_back(make_block("blue", 0.7, 0.3));
  s.objects.push_back(make_block("red", 0.4, 0.2));
  for (auto& o : make_cabinet({0.1, 0, 0})) s.objects.push_back(o);
  EXPECT_EQ(detect(s, "blue block").size(), 2u);
  EXPECT_TRUE(detect(s, "unicorn").empty());

  const auto handles = detect(s, "topmost drawer handle");
  ASSERT_EQ(handles.size(), 1u);
  const SceneObject& top = s.object("top drawer");
  const auto pts = world_points(top, *top.part("handle"));
  Vec3 mean{};
  for (const auto& p : pts) mean += p;
  mean = mean / static_cast<double>(pts.size());
  EXPECT_NEAR(distance(handles[0].center, mean), 0.0, 1e-12);
  EXPECT_EQ(detect(s, "drawer handle").size(), 3u);
  EXPECT_EQ(detect(s, "second to the top drawer")[0].name, "middle drawer");
  EXPECT_EQ(detect(s, "second to the bottom drawer handle")[0].name, "middle drawer handle");
}

TEST(Detect, RecordsAreWellFormed) {
  const TaskSpec t = make_task("push_to_pos", Split::seen, 4);
  const WorldState s = reset(t, 4);
  for (const auto& o : s.objects) {
    for (const auto& r : detect(s, o.name)) {
      EXPECT_FALSE(r.occupancy.empty());
      EXPECT_NEAR(norm(r.normal), 1.0, 1e-6);
      // No phantom voxels: every occupied voxel holds one of the points.
      std::set<std::size_t> rasterized;
      for (const auto& p : world_points(o)) rasterized.insert(s.spec.linear(world_to_voxel(p, s.spec)));
      for (auto v : r.occupancy) ASSERT_TRUE(rasterized.count(v));
    }
  }
}

TEST(StepWaypoint, HoldOnlyAdvancesTick) {
  const TaskSpec t = make_task("push_to_pos", Split::seen, 0);
  const WorldState s = reset(t, 0);
  WorldState n = step_waypoint(s, hold(s));
  EXPECT_EQ(n.tick, s.tick + 1);
  n.tick = s.tick;
  EXPECT_TRUE(n == s);
}

TEST(StepWaypoint, QuarterSpeedCap) {
  WorldState s = empty_world();
  const Vec3 start = s.ee_position;
  s = step_waypoint(s, {{0.1, 0.1, 0.1}, {}, 0.25, 0});
  EXPECT_LE(distance(s.ee_position, start), 0.0125 + 1e-12);
  EXPECT_NEAR(distance(s.ee_position, start), 0.0125, 1e-12);
}

TEST(StepWaypoint, OutsideWorkspaceIsClampedAndFlagged) {
  WorldState s = empty_world();
  s = step_waypoint(s, {{0.5, 0.5, 1.5}, {}, 1.0, 0});
  EXPECT_EQ(s.flags.clamped, 1);
  EXPECT_LE(s.ee_position.z, 1.0);
}

TEST(StepWaypoint, PullingGraspedHandleOpensDrawer) {
  WorldState s = empty_world();
  for (auto& o : make_cabinet({0.0, 0.0, 0.0})) s.objects.push_back(o);
  const Vec3 h = detect(s, "top drawer handle")[0].center;
  s.ee_position = h;
  s = step_waypoint(s, {h, {}, 1.0, 1});
  ASSERT_TRUE(s.grasp.has_value());
  double last = s.object("top drawer").joint.q;
  for (int k = 0; k < 4; ++k) {
    s = step_waypoint(s, {s.ee_position - Vec3{0, 0.05, 0}, {}, 1.0, 1});
    const double q = s.object("top drawer").joint.q;
    EXPECT_GT(q, last);
    last = q;
  }
  // Joint kinematics: opening equals the pulled distance.
  EXPECT_NEAR(last, 0.2, 1e-9);
  EXPECT_NEAR(h.y - s.ee_position.y, 0.2, 1e-9);
  // A fifth pull hits the joint limit.
  s = step_waypoint(s, {s.ee_position - Vec3{0, 0.05, 0}, {}, 1.0, 1});
  EXPECT_NEAR(s.object("top drawer").joint.q, 0.2, 1e-12);
}

TEST(StepWaypoint, GraspedBlockStaysRigid) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.5, 0.5));
  s.ee_position = {0.5, 0.5, 0.05 + kContactMargin};
  s = step_waypoint(s, {s.ee_position, {}, 1.0, 1});
  ASSERT_TRUE(s.grasp.has_value());
  const Vec3 rel = s.object("blue block").position - s.ee_position;
  for (int k = 0; k < 20; ++k) {
    const Vec3 goal{0.3 + 0.02 * k, 0.6, 0.2 + 0.005 * k};
    s = step_waypoint(s, {goal, Quat::identity(), 1.0, 1});
    EXPECT_NEAR(distance(s.object("blue block").position - s.ee_position, rel), 0.0, 1e-9);
  }
  s = step_waypoint(s, {s.ee_position, {}, 1.0, 0});
  EXPECT_FALSE(s.grasp.has_value());
  EXPECT_DOUBLE_EQ(s.object("blue block").position.z, kBlockHalf);
}

TEST(StepWaypoint, EndEffectorPushesBlockHorizontally) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.5, 0.5));
  s.ee_position = {0.4, 0.5, 0.025};
  for (int k = 0; k < 4; ++k) s = step_waypoint(s, {{0.6, 0.5, 0.025}, {}, 1.0, 0});
  EXPECT_GT(s.object("blue block").position.x, 0.5);
  EXPECT_NEAR(s.object("blue block").position.y, 0.5, 1e-12);
  // From above the block blocks the descent.
  WorldState v = empty_world();
  v.objects.push_back(make_block("blue", 0.5, 0.5));
  v.ee_position = {0.5, 0.5, 0.2};
  for (int k = 0; k < 6; ++k) v = step_waypoint(v, {{0.5, 0.5, 0.0}, {}, 1.0, 0});
  EXPECT_NEAR(v.ee_position.z, 0.05 + kContactMargin, 1e-9);
  EXPECT_EQ(v.object("blue block").position, (Vec3{0.5, 0.5, kBlockHalf}));
}

TEST(ApplyPush, ZeroDistanceAndFreeTranslation) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.4, 0.5));
  const Vec3 contact{0.4 - kBlockHalf, 0.5, kBlockHalf};
  const WorldState z = apply_push(s, contact, {1, 0, 0}, 0.0);
  EXPECT_EQ(z.object("blue block").position, s.object("blue block").position);
  const WorldState m = apply_push(s, contact, {1, 0, 0}, 0.1);
  EXPECT_NEAR(m.object("blue block").position.x, 0.5, 1e-12);
  EXPECT_NEAR(m.object("blue block").position.y, 0.5, 1e-12);
  EXPECT_EQ(m.flags.collision, 0);
}

TEST(ApplyPush, WallTruncatesDisplacement) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.945, 0.5));
  const Vec3 contact{0.945 - kBlockHalf, 0.5, kBlockHalf};
  const WorldState m = apply_push(s, contact, {1, 0, 0}, 0.1);
  // Geometric clearance to the workspace bound: 1 - (0.945 + 0.025).
  EXPECT_NEAR(m.object("blue block").position.x - 0.945, 0.03, 0.002 + 1e-9);
  EXPECT_GE(m.flags.collision, 1);
}

TEST(ApplyPush, BlockStopsAtNeighbour) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.4, 0.5));
  s.objects.push_back(make_block("red", 0.5, 0.5));
  const WorldState m = apply_push(s, {0.4 - kBlockHalf, 0.5, kBlockHalf}, {1, 0, 0}, 0.1);
  const double gap = (0.5 - kBlockHalf) - (m.object("blue block").position.x + kBlockHalf);
  EXPECT_GE(gap, -1e-9);
  EXPECT_LE(gap, 0.0021);
  EXPECT_EQ(m.object("red block").position.x, 0.5);
}

TEST(ApplyPush, MissFlagsAndDoesNothing) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.4, 0.5));
  const WorldState m = apply_push(s, {0.1, 0.1, 0.02}, {1, 0, 0}, 0.1);
  EXPECT_EQ(m.flags.contact_miss, 1);
  EXPECT_EQ(m.tick, s.tick);
}

TEST(ApplyPush, ClosesDrawer) {
  WorldState s = empty_world();
  for (auto& o : make_cabinet({0.15, 0, 0})) s.objects.push_back(o);
  const auto h = detect(s, "top drawer handle")[0];
  const WorldState m = apply_push(s, h.center, {0, 1, 0}, 0.15);
  EXPECT_NEAR(m.object("top drawer").joint.q, 0.0, 1e-12);
}

TEST(Disturbance, DisplacementReflectedByDetect) {
  WorldState s = empty_world();
  s.objects.push_back(make_block("blue", 0.4, 0.5));
  s = inject_disturbance(s, {DisturbanceKind::object_displacement, 0, "blue block", {0.7, 0.2, 0.0}, {}});
  const auto r = detect(s, "blue block");
  EXPECT_NEAR(r[0].center.x, 0.7, 1e-9);
  EXPECT_NEAR(r[0].center.y, 0.2, 1e-9);
  const WorldState bad = inject_disturbance(s, {DisturbanceKind::object_displacement, 0, "blue block", {1.7, 0.2, 0}, {}});
  EXPECT_EQ(bad.flags.rejected, 1);
  EXPECT_THROW(inject_disturbance(s, {DisturbanceKind::robot_force, 5, "", {}, {}}), Error);
}

TEST(Disturbance, ProgressReversalReopensDrawer) {
  WorldState s = empty_world();
  for (auto& o : make_cabinet({0.15, 0, 0})) s.objects.push_back(o);
  s.object("top drawer").joint.q = 0.03;  // 80% closed
  s = inject_disturbance(s, {DisturbanceKind::progress_reversal, 0, "top drawer", {}, {}});
  EXPECT_DOUBLE_EQ(s.object("top drawer").joint.q, 0.15);
  const WorldState r = inject_disturbance(s, {DisturbanceKind::progress_reversal, 0, "cabinet", {}, {}});
  EXPECT_EQ(r.flags.rejected, 1);
}

TEST(Disturbance, RobotForceIsCapped) {
  WorldState s = empty_world();
  const Vec3 p = s.ee_position;
  s = inject_disturbance(s, {DisturbanceKind::robot_force, 0, "", {0.3, 0, 0}, {}});
  EXPECT_NEAR(distance(s.ee_position, p), 0.05, 1e-12);
}

TEST(Disturbance, TriggeredEventFiresWhenJointDrops) {
  WorldState s = empty_world();
  for (auto& o : make_cabinet({0.15, 0, 0})) s.objects.push_back(o);
  DisturbanceEvent ev{DisturbanceKind::progress_reversal, 0, "top drawer", {}, 0.03};
  s.pending.push_back(ev);
  const auto h = detect(s, "top drawer handle")[0];
  s = apply_push(s, h.center, {0, 1, 0}, 0.15);
  ASSERT_EQ(s.fired.size(), 1u);
  EXPECT_GT(s.object("top drawer").joint.q, 0.03);
}

TEST(Success, Thresholds) {
  TaskSpec t = make_task("push_to_pos", Split::seen, 0);
  WorldState s = reset(t, 0);
  const Vec3 goal = pos_point(t.at("pos"));
  s.object(t.at("obj")).position = {goal.x + 0.03, goal.y, kBlockHalf};
  EXPECT_TRUE(success_check(t, s));

  TaskSpec k = make_task("move_keep_distance", Split::seen, 0);
  k.bindings["dist"] = "7";
  WorldState w = reset(k, 0);
  w.ee_position = pos_point(k.at("pos"));
  w.monitor.min_clearance = 0.05;
  EXPECT_FALSE(success_check(k, w));
  w.monitor.min_clearance = 0.07;
  EXPECT_TRUE(success_check(k, w));

  TaskSpec d = make_task("close_drawer", Split::seen, 0);
  WorldState c = reset(d, 0);
  c.object(drawer_name(d.at("deixis"))).joint.q = 0.02 * 0.2;
  EXPECT_TRUE(success_check(d, c));
}

TEST(Determinism, ScriptedRolloutIsReproducible) {
  auto run = [] {
    const TaskSpec t = make_task("push_to_pos", Split::seen, 5, true);
    WorldState s = reset(t, 5);
    for (int k = 0; k < 30; ++k) s = step_waypoint(s, {{0.2 + 0.02 * k, 0.3, 0.03}, {}, 1.0, k > 20});
    return s;
  };
  EXPECT_TRUE(run() == run());
}

TEST(Articulation, JointsStayInRange) {
  WorldState s = empty_world();
  for (auto& o : make_cabinet({0.1, 0.05, 0.0})) s.objects.push_back(o);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    s = step_waypoint(s, {{u(rng), u(rng) * 0.8, u(rng) * 0.5}, {}, 1.0, static_cast<int>(u(rng) < 0.5)});
    for (const auto& o : s.objects)
      if (o.articulated()) {
        ASSERT_GE(o.joint.q, o.joint.lo);
        ASSERT_LE(o.joint.q, o.joint.hi);
      }
  }
}

TEST(Latch, DoorMovesOnlyAfterHandlePress) {
  WorldState s = empty_world();
  s.objects.push_back(make_door());
  const Vec3 h = detect(s, "door handle")[0].center;
  s.ee_position = h;
  s = step_waypoint(s, {h, {}, 1.0, 1});
  ASSERT_TRUE(s.grasp.has_value());
  // Pulling without pressing: latched.
  s = step_waypoint(s, {h - Vec3{0, 0.05, 0}, {}, 1.0, 1});
  EXPECT_EQ(s.object("door").joint.q, 0.0);
  // Shallow press stays latched.
  s = step_waypoint(s, {h - Vec3{0, 0, 0.03}, {}, 1.0, 1});
  s = step_waypoint(s, {s.ee_position - Vec3{0, 0.05, 0}, {}, 1.0, 1});
  EXPECT_EQ(s.object("door").joint.q, 0.0);
  // Press past the latch, then pull.
  s = step_waypoint(s, {h - Vec3{0, 0, 0.045}, {}, 1.0, 1});
  EXPECT_TRUE(s.object("door").joint.unlatched);
  for (int k = 0; k < 4; ++k) s = step_waypoint(s, {s.ee_position - Vec3{0, 0.05, 0}, {}, 1.0, 1});
  EXPECT_GT(s.object("door").joint.q, kDoorOpenAngle);
  // Releasing re-springs the handle; the door keeps its angle.
  const double q = s.object("door").joint.q;
  s = step_waypoint(s, {s.ee_position, {}, 1.0, 0});
  EXPECT_EQ(s.object("door").joint.handle, 0.0);
  EXPECT_EQ(s.object("door").joint.q, q);
}

TEST(TaskJson, RoundTrip) {
  TaskSpec t = make_task("move_keep_distance", Split::unseen, 2, true);
  t.schedule.push_back({DisturbanceKind::progress_reversal, 3, "top drawer", {}, 0.02});
  const nlohmann::json j = t;
  EXPECT_TRUE(j.get<TaskSpec>() == t);
  nlohmann::json bad = j;
  bad["bindings"].erase("dist");
  EXPECT_THROW(bad.get<TaskSpec>(), Error);
}

TEST(TaskSpec, BindingsComeFromSplitLists) {
  for (std::uint64_t i = 0; i < 20; ++i) {
    const TaskSpec s = make_task("move_stay_side", Split::seen, i);
    const TaskSpec u = make_task("move_stay_side", Split::unseen, i);
    for (const char* slot : {"pos", "preposition", "obj"}) {
      const auto& sv = attribute_values(slot, Split::seen);
      const auto& uv = attribute_values(slot, Split::unseen);
      EXPECT_NE(std::find(sv.begin(), sv.end(), s.at(slot)), sv.end());
      EXPECT_NE(std::find(uv.begin(), uv.end(), u.at(slot)), uv.end());
    }
  }
}
