#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vxp/lmp/runtime.hpp"
#include "vxp/planner/planner.hpp"
#include "vxp/sim/tasks.hpp"

namespace vxp::bench {

using sim::TaskSpec;
using sim::WorldState;

enum class FailureCategory { none, perception, specification, dynamics, other };

inline std::string_view to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::none: return "none";
    case FailureCategory::perception: return "perception";
    case FailureCategory::specification: return "specification";
    case FailureCategory::dynamics: return "dynamics";
    case FailureCategory::other: return "other";
  }
  return "?";
}

inline FailureCategory failure_category_from(std::string_view s) {
  for (auto c : {FailureCategory::none, FailureCategory::perception, FailureCategory::specification,
                 FailureCategory::dynamics, FailureCategory::other})
    if (to_string(c) == s) return c;
  fail(ErrorKind::invalid_input, "unknown failure category '" + std::string(s) + "'");
}

/// Which module an error class points at.
inline FailureCategory attribute(ErrorKind k) {
  switch (k) {
    case ErrorKind::perception_failure: return FailureCategory::perception;
    case ErrorKind::generation:
    case ErrorKind::syntax:
    case ErrorKind::unknown_call:
    case ErrorKind::unbounded_loop:
    case ErrorKind::step_budget:
    case ErrorKind::type_error:
    case ErrorKind::contract_violation:
    case ErrorKind::composition: return FailureCategory::specification;
    default: return FailureCategory::other;
  }
}

struct EpisodeConfig {
  planner::PlannerConfig planner{};
  /// Simulated ticks per episode.
  long tick_budget = 600;
  /// Directory for JSONL traces; empty disables them.
  std::filesystem::path trace_dir;
  /// Applied right after reset; fault injection for tests.
  std::function<void(WorldState&)> scene_hook;
};

struct EpisodeResult {
  std::string task_id;
  std::string instruction;
  std::string split;
  std::uint64_t seed = 0;
  bool success = false;
  long ticks = 0;
  FailureCategory failure = FailureCategory::none;
  std::string error;
  std::vector<std::string> subtasks;
  int replans = 0;
  int pushes = 0;
  double max_divergence = 0.0;
  std::string trace_path;
  /// One JSON object per replan or push, in execution order.
  std::vector<nlohmann::json> trace;

  bool operator==(const EpisodeResult& o) const {
    return task_id == o.task_id && instruction == o.instruction && split == o.split && seed == o.seed &&
           success == o.success && ticks == o.ticks && failure == o.failure && error == o.error &&
           subtasks == o.subtasks && replans == o.replans && pushes == o.pushes &&
           max_divergence == o.max_divergence && trace == o.trace;
  }
};

inline nlohmann::json to_json(const planner::ReplanRecord& r) {
  return {{"type", "replan"},        {"tick", r.tick},
          {"start", {r.start.x, r.start.y, r.start.z}},
          {"terminal", {r.terminal.x, r.terminal.y, r.terminal.z}},
          {"score", r.score},        {"greedy_score", r.greedy_score},
          {"mean_score", r.mean_score}, {"candidates", r.candidates},
          {"length", r.length},      {"escape", r.escape}};
}

inline nlohmann::json to_json(const planner::PushRecord& r) {
  const auto v = [](const Vec3& p) { return nlohmann::json::array({p.x, p.y, p.z}); };
  return {{"type", "push"},
          {"tick", r.tick},
          {"contact", v(r.action.contact)},
          {"direction", v(r.action.direction)},
          {"distance", r.action.distance},
          {"score", r.score},
          {"predicted", v(r.predicted)},
          {"observed", v(r.observed)},
          {"contact_miss", r.contact_miss}};
}

namespace detail {

/// Straight-line motion to the rest pose, gripper unchanged.
inline void reset_pose(WorldState& s, long tick_limit) {
  const long t0 = s.tick;
  while (distance(s.ee_position, sim::kRestPosition) > 1e-9 && s.tick - t0 < tick_limit)
    sim::step_waypoint_inplace(s, {sim::kRestPosition, Quat{}, 1.0, s.gripper});
}

}  // namespace detail

/// Runs one episode end to end. Never throws for task-level failures; the
/// error class is mapped to a failure category instead.
inline EpisodeResult run_episode(lmp::LmpRuntime& rt, const TaskSpec& task, std::uint64_t seed,
                                 const EpisodeConfig& cfg = {}) {
  EpisodeResult r;
  r.task_id = task.template_id;
  r.instruction = task.instruction();
  r.split = std::string(sim::to_string(task.split));
  r.seed = seed;
  WorldState s = sim::reset(task, seed);
  if (cfg.scene_hook) cfg.scene_hook(s);
  const long t0 = s.tick;
  // A scene that lost a task object cannot succeed; the failure surfaces
  // through detection instead.
  const auto done = [&task](const WorldState& w) {
    try {
      return sim::success_check(task, w);
    } catch (const Error&) {
      return false;
    }
  };
  const auto remaining = [&] { return cfg.tick_budget - (s.tick - t0); };
  std::optional<ErrorKind> error;
  try {
    r.subtasks = rt.plan_subtasks(r.instruction, s);
    std::uint64_t k = 0;
    for (const auto& sub : r.subtasks) {
      if (done(s) || remaining() <= 0) break;
      const lmp::Composition comp = rt.compose(sub, s);
      for (const auto& step : comp.steps) {
        if (done(s) || remaining() <= 0) break;
        const std::uint64_t step_seed = seed * 1000003u + (++k) * 9176u;
        if (step.reset) {
          detail::reset_pose(s, remaining());
          continue;
        }
        const planner::MapClosure maps = [&rt, &step](const WorldState& w) { return rt.evaluate(step, w); };
        if (step.entity.kind == lmp::EntityRef::Kind::end_effector) {
          planner::MpcResult m = planner::run_mpc(s, maps, done, cfg.planner, step_seed, remaining());
          r.replans += m.replans;
          for (const auto& rec : m.trace) r.trace.push_back(to_json(rec));
        } else {
          planner::PushResult p = planner::run_push(s, maps, done, cfg.planner, step_seed, remaining());
          r.pushes += p.pushes;
          r.max_divergence = std::max(r.max_divergence, p.max_divergence);
          for (const auto& rec : p.trace) r.trace.push_back(to_json(rec));
        }
      }
    }
  } catch (const Error& e) {
    error = e.kind();
    r.error = e.what();
  }
  r.ticks = s.tick - t0;
  r.success = done(s);
  if (r.success) r.failure = FailureCategory::none;
  else if (error && attribute(*error) != FailureCategory::other) r.failure = attribute(*error);
  else if (r.max_divergence > cfg.planner.divergence_threshold) r.failure = FailureCategory::dynamics;
  else r.failure = FailureCategory::other;

  if (!cfg.trace_dir.empty()) {
    std::filesystem::create_directories(cfg.trace_dir);
    const auto path = cfg.trace_dir / (r.task_id + "_" + r.split + "_" + std::to_string(seed) + ".jsonl");
    std::ofstream os(path);
    if (!os) fail(ErrorKind::io, "cannot write trace " + path.string());
    os << nlohmann::json{{"type", "episode"},     {"task", r.task_id},     {"instruction", r.instruction},
                         {"seed", seed},          {"success", r.success},  {"ticks", r.ticks},
                         {"failure", to_string(r.failure)}, {"error", r.error}, {"subtasks", r.subtasks}}
              .dump()
       << "\n";
    for (const auto& j : r.trace) os << j.dump() << "\n";
    r.trace_path = path.string();
  }
  return r;
}

}  // namespace vxp::bench
