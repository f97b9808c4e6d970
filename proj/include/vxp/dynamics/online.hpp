#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "vxp/dynamics/learned.hpp"
#include "vxp/lmp/runtime.hpp"
#include "vxp/planner/planner.hpp"
#include "vxp/sim/tasks.hpp"

namespace vxp::dynamics {

using sim::Waypoint;
using sim::WorldState;

inline constexpr int kActionDim = 4;  // ee displacement (m) and gripper

// ---------------------------------------------------------------------------
// Zero-shot trajectories

/// Per-tick waypoints that replay `traj` from `from`: every tick moves one
/// speed cap toward the first waypoint beyond reach, with the gripper read at
/// the voxel the tick starts in. One in-place tick at the end applies the
/// gripper value of the final voxel.
inline std::vector<Waypoint> per_tick_waypoints(const planner::Trajectory& traj, const lmp::MapSet& maps,
                                                const GridSpec& spec, Vec3 from, int gripper) {
  std::vector<Waypoint> out;
  const auto gripper_at = [&](const Vec3& p) {
    if (!maps.gripper) return gripper;
    return maps.gripper->at(spec.clamp(world_to_voxel(spec.clamp(p), spec))) >= 0.5 ? 1 : 0;
  };
  const auto scale_at = [&](const Vec3& p) {
    const double v = maps.velocity ? maps.velocity->at(spec.clamp(world_to_voxel(spec.clamp(p), spec))) : 1.0;
    return v > 0.0 ? v : 1.0;
  };
  std::size_t j = 0;
  const auto& w = traj.waypoints;
  for (int guard = 0; guard < 1000; ++guard) {
    const double cap = sim::kVmax * scale_at(from);
    while (j + 1 < w.size() && distance(from, w[j].position) <= cap) ++j;
    const Vec3 d = w[j].position - from;
    const double len = norm(d);
    if (len < 1e-9 && j + 1 == w.size()) break;
    const Vec3 next = len > cap ? from + d * (cap / len) : w[j].position;
    out.push_back({next, w[j].rotation, scale_at(from), gripper_at(from)});
    from = next;
  }
  out.push_back({from, w.back().rotation, 1.0, gripper_at(from)});
  return out;
}

/// Open-loop trajectory for planner sample `variant` under identity
/// dynamics: every sub-task is planned on a copy of `s` whose end-effector
/// sits where the previous sub-task ended; objects never move.
inline std::vector<Waypoint> synthesize_prior(lmp::LmpRuntime& rt, const sim::TaskSpec& task, const WorldState& s,
                                              int variant, const planner::PlannerConfig& cfg, std::uint64_t seed) {
  WorldState v = s;
  std::vector<Waypoint> out;
  const auto subs = rt.plan_subtasks(task.instruction(), v, variant);
  std::uint64_t k = 0;
  for (const auto& sub : subs) {
    const lmp::Composition comp = rt.compose(sub, v);
    for (const auto& step : comp.steps) {
      if (step.reset) continue;
      if (step.entity.kind != lmp::EntityRef::Kind::end_effector)
        fail(ErrorKind::composition, "exploration priors need end-effector sub-tasks");
      const lmp::MapSet maps = rt.evaluate(step, v);
      const planner::PlanContext ctx = planner::make_context(maps, v, cfg);
      const VoxelIndex start = v.spec.clamp(world_to_voxel(v.spec.clamp(v.ee_position), v.spec));
      const planner::Plan plan =
          planner::sample_and_score(ctx, start, {v.ee_rotation, v.gripper}, cfg, seed + 31 * (++k), ctx.collides(start));
      const auto ticks = per_tick_waypoints(plan.trajectory, maps, v.spec, v.ee_position, v.gripper);
      out.insert(out.end(), ticks.begin(), ticks.end());
      v.ee_position = out.back().position;
      v.ee_rotation = out.back().rotation;
      v.gripper = out.back().gripper;
    }
  }
  if (out.empty()) fail(ErrorKind::composition, "zero-shot synthesis produced no waypoints");
  return out;
}

// ---------------------------------------------------------------------------
// Model-based MPC over candidate sequences

/// A candidate is either absolute waypoints (turned into displacements from
/// the predicted end-effector at each step) or raw displacements.
struct Candidate {
  std::vector<Waypoint> steps;
  bool relative = false;
};

inline Vec3 clip_to_cap(const Vec3& d) {
  const double n = norm(d);
  return n > sim::kVmax ? d * (sim::kVmax / n) : d;
}

inline Vec3 displacement(const Candidate& c, std::size_t h, const Vec3& ee) {
  return clip_to_cap(c.relative ? c.steps[h].position : c.steps[h].position - ee);
}

/// Rolls every candidate through the model and returns the index with the
/// highest predicted value of observation dimension `progress_dim` at the
/// end. Ties keep the lower index, and candidate 0 is kept unless another
/// beats it by more than `margin` so prediction noise cannot steer the arm.
inline std::size_t choose_candidate(const LearnedModel& model, const std::vector<double>& o,
                                    const std::vector<Candidate>& cands, int progress_dim, double margin = 0.0) {
  if (cands.empty()) fail(ErrorKind::invalid_input, "no candidates");
  const auto m = static_cast<Eigen::Index>(cands.size());
  const auto od = static_cast<Eigen::Index>(o.size());
  MatrixXd obs(m, od);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < od; ++j) obs(i, j) = o[static_cast<std::size_t>(j)];
  std::size_t horizon = 0;
  for (const auto& c : cands) horizon = std::max(horizon, c.steps.size());
  MatrixXd act(m, kActionDim);
  for (std::size_t h = 0; h < horizon; ++h) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Candidate& c = cands[static_cast<std::size_t>(i)];
      const std::size_t hh = std::min(h, c.steps.size() - 1);
      const Vec3 d = displacement(c, hh, {obs(i, 0), obs(i, 1), obs(i, 2)});
      act.row(i) << d.x, d.y, d.z, static_cast<double>(c.steps[hh].gripper);
    }
    obs = model.predict_batch(obs, act);
  }
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < m; ++i)
    if (obs(i, progress_dim) > obs(static_cast<Eigen::Index>(best), progress_dim)) best = static_cast<std::size_t>(i);
  if (obs(static_cast<Eigen::Index>(best), progress_dim) - obs(0, progress_dim) <= margin) return 0;
  return best;
}

struct OnlineConfig {
  /// Zero-shot trajectories per scene, one per planner sample.
  int priors = 4;
  /// Exploration noise around the prior during data collection, meters.
  double explore_sigma = 0.01;
  /// Noise of the perturbed candidates during evaluation, meters.
  double eval_sigma = 0.005;
  int episodes_per_round = 5;
  int eval_episodes = 20;
  std::size_t transition_budget = 300;
  double target_success = 0.8;
  int explore_candidates = 64;
  int eval_candidates = 128;
  /// Predicted progress a candidate needs over candidate 0 to be chosen.
  double progress_margin = 0.01;
  int episode_ticks = 20;
  /// Model rollout length per MPC decision, ticks.
  int horizon = 10;
  int max_rounds = 100;
  int train_steps = 3000;
  std::vector<int> hidden{64, 64};
  double learning_rate = 1e-3;
  /// Half-width of the uniform displacement sampler without a prior, meters.
  double uniform_range = 0.05;
  std::uint64_t eval_seed_base = 1'000'000'000ull;
  planner::PlannerConfig planner{};
};

struct CurveRow {
  int round = 0;
  std::size_t transitions = 0;
  double loss = 0.0;
  double success = 0.0;
  double simulated_seconds = 0.0;
};

struct OnlineResult {
  LearnedModel model;
  double success = 0.0;
  double baseline_success = 0.0;
  std::size_t transitions = 0;
  double interaction_seconds = 0.0;
  bool exceeded = false;
  int rounds = 0;
  std::vector<CurveRow> curve;
};

inline void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows) {
  os << "round,transitions,loss,success_rate,simulated_seconds\n";
  for (const auto& r : rows)
    os << r.round << "," << r.transitions << "," << r.loss << "," << r.success << "," << r.simulated_seconds << "\n";
}

/// Online dynamics learning on a latched-articulation task. With
/// `use_prior`, candidate action sequences are noisy copies of the zero-shot
/// trajectories; without it they are uniform over the action space.
class OnlineLearner {
 public:
  OnlineLearner(lmp::LmpRuntime& rt, sim::TaskSpec task, OnlineConfig cfg, bool use_prior)
      : rt_(rt), task_(std::move(task)), cfg_(std::move(cfg)), use_prior_(use_prior) {
    const WorldState s = sim::reset(task_, cfg_.eval_seed_base);
    obs_dim_ = static_cast<int>(sim::observe(task_, s).size());
    progress_dim_ = obs_dim_ - 1;
  }

  int obs_dim() const { return obs_dim_; }

  /// Zero-shot trajectories for the scene reset from `seed`, cached.
  const std::vector<std::vector<Waypoint>>& priors_for(std::uint64_t seed) {
    auto it = priors_.find(seed);
    if (it != priors_.end()) return it->second;
    const WorldState s = sim::reset(task_, seed);
    std::vector<std::vector<Waypoint>> p;
    for (int k = 0; k < cfg_.priors; ++k) p.push_back(synthesize_prior(rt_, task_, s, k, cfg_.planner, seed + k));
    return priors_.emplace(seed, std::move(p)).first->second;
  }

  struct Rollout {
    bool success = false;
    long ticks = 0;
    WorldState last;
  };

  /// One episode of model-based MPC. `explore_prior` >= 0 selects the single
  /// prior used for collection; -1 means evaluation over all priors.
  Rollout episode(const LearnedModel& model, std::uint64_t seed, int explore_prior, TransitionBuffer* buf,
                  std::size_t budget) {
    WorldState s = sim::reset(task_, seed);
    const std::vector<std::vector<Waypoint>>* priors = use_prior_ ? &priors_for(seed) : nullptr;
    const bool collecting = buf != nullptr;
    const int m = collecting ? cfg_.explore_candidates : cfg_.eval_candidates;
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(explore_prior + 2));
    Rollout r;
    for (int t = 0; t < cfg_.episode_ticks; ++t) {
      if (sim::success_check(task_, s)) break;
      if (collecting && buf->size() >= budget) break;
      const std::size_t horizon = static_cast<std::size_t>(std::min(cfg_.horizon, cfg_.episode_ticks - t));
      std::vector<Candidate> cands;
      for (int c = 0; c < m; ++c) {
        Candidate cand;
        if (priors) {
          const int k = collecting ? explore_prior : c % static_cast<int>(priors->size());
          const double sigma = collecting ? cfg_.explore_sigma : (c < static_cast<int>(priors->size()) ? 0.0 : cfg_.eval_sigma);
          const ExplorationPrior prior{(*priors)[static_cast<std::size_t>(k)], sigma};
          // One draw per candidate: the offset holds over the horizon.
          const std::uint64_t draw = rng();
          for (std::size_t h = 0; h < horizon; ++h) cand.steps.push_back(sample_action_with_prior(prior, t + h, draw));
        } else {
          cand.relative = true;
          std::uniform_real_distribution<double> u(-cfg_.uniform_range, cfg_.uniform_range);
          std::bernoulli_distribution g(0.5);
          for (std::size_t h = 0; h < horizon; ++h) {
            const Vec3 d{u(rng), u(rng), u(rng)};
            cand.steps.push_back({d, s.ee_rotation, 1.0, g(rng) ? 1 : 0});
          }
        }
        cands.push_back(std::move(cand));
      }
      const std::vector<double> o = sim::observe(task_, s);
      const Candidate& pick = cands[choose_candidate(model, o, cands, progress_dim_, cfg_.progress_margin)];
      const Vec3 d = displacement(pick, 0, s.ee_position);
      const Waypoint& w = pick.steps[0];
      sim::step_waypoint_inplace(s, {s.ee_position + d, w.rotation, 1.0, w.gripper});
      ++r.ticks;
      if (collecting) buf->add({o, {d.x, d.y, d.z, static_cast<double>(w.gripper)}, sim::observe(task_, s)});
    }
    r.success = sim::success_check(task_, s);
    r.last = std::move(s);
    return r;
  }

  double evaluate(const LearnedModel& model) {
    int ok = 0;
    for (int i = 0; i < cfg_.eval_episodes; ++i)
      ok += episode(model, cfg_.eval_seed_base + static_cast<std::uint64_t>(i), -1, nullptr, 0).success;
    return cfg_.eval_episodes > 0 ? static_cast<double>(ok) / cfg_.eval_episodes : 0.0;
  }

  OnlineResult run(std::uint64_t seed) {
    OnlineResult res;
    LearnedModel model(obs_dim_, kActionDim, seed, cfg_.hidden);
    TransitionBuffer buf(std::max<std::size_t>(cfg_.transition_budget, 1));
    res.baseline_success = evaluate(model);
    res.model = model;
    res.success = res.baseline_success;
    res.curve.push_back({0, 0, 0.0, res.baseline_success, 0.0});
    long ticks = 0;
    std::uint64_t episode_index = 0;
    bool reached = res.baseline_success >= cfg_.target_success;
    for (int round = 1; !reached && round <= cfg_.max_rounds && buf.size() < cfg_.transition_budget; ++round) {
      for (int e = 0; e < cfg_.episodes_per_round && buf.size() < cfg_.transition_budget; ++e) {
        const std::uint64_t ep_seed = seed * 1'000'003ull + (++episode_index);
        const int k = use_prior_ ? static_cast<int>((episode_index - 1) % static_cast<std::uint64_t>(cfg_.priors)) : 0;
        ticks += episode(model, ep_seed, k, &buf, cfg_.transition_budget).ticks;
      }
      const double loss = model.fit(buf, cfg_.train_steps, cfg_.learning_rate);
      const double success = evaluate(model);
      res.curve.push_back({round, buf.size(), loss, success, ticks * sim::kTickSeconds});
      res.rounds = round;
      if (success > res.success) {
        res.success = success;
        res.model = model;
      }
      reached = success >= cfg_.target_success;
    }
    res.transitions = buf.size();
    res.interaction_seconds = ticks * sim::kTickSeconds;
    res.exceeded = !reached;
    return res;
  }

 private:
  lmp::LmpRuntime& rt_;
  sim::TaskSpec task_;
  OnlineConfig cfg_;
  bool use_prior_;
  int obs_dim_ = 0, progress_dim_ = 0;
  std::map<std::uint64_t, std::vector<std::vector<Waypoint>>> priors_;
};

inline OnlineResult online_loop(lmp::LmpRuntime& rt, const sim::TaskSpec& task, bool use_prior,
                                const OnlineConfig& cfg, std::uint64_t seed) {
  if (task.template_id != "open_door") fail(ErrorKind::invalid_input, "online learning targets latched-articulation tasks");
  OnlineLearner learner(rt, task, cfg, use_prior);
  return learner.run(seed);
}

}  // namespace vxp::dynamics
