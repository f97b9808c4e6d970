#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vxp/lmp/fixtures.hpp"
#include "vxp/lmp/interpreter.hpp"
#include "vxp/lmp/parser.hpp"
#include "vxp/lmp/source.hpp"
#include "vxp/voxel/distance_transform.hpp"
#include "vxp/voxel/smoothing.hpp"

namespace vxp::lmp {

/// What the value maps steer.
struct EntityRef {
  enum class Kind { end_effector, object, part };
  Kind kind = Kind::end_effector;
  /// parse_query_obj query that resolves the entity on a fresh state.
  std::string query;
  /// Detected name, e.g. "blue block" or "top drawer handle".
  std::string name;

  bool operator==(const EntityRef&) const = default;
};

inline std::string_view to_string(EntityRef::Kind k) {
  switch (k) {
    case EntityRef::Kind::end_effector: return "end_effector";
    case EntityRef::Kind::object: return "object";
    case EntityRef::Kind::part: return "part";
  }
  return "?";
}

inline EntityRef::Kind entity_kind_of(const std::string& name) {
  if (name == "gripper") return EntityRef::Kind::end_effector;
  if (name.size() > 7 && name.compare(name.size() - 7, 7, " handle") == 0) return EntityRef::Kind::part;
  return EntityRef::Kind::object;
}

/// Post-processed maps for one execute() call: affordance densified,
/// avoidance smoothed.
struct MapSet {
  std::optional<ValueMap> affordance, avoidance, rotation, velocity, gripper;
  EntityRef entity;

  const std::optional<ValueMap>& get(MapKind k) const {
    switch (k) {
      case MapKind::affordance: return affordance;
      case MapKind::avoidance: return avoidance;
      case MapKind::rotation: return rotation;
      case MapKind::velocity: return velocity;
      case MapKind::gripper: return gripper;
    }
    return affordance;
  }
  std::optional<ValueMap>& get(MapKind k) { return const_cast<std::optional<ValueMap>&>(std::as_const(*this).get(k)); }

  bool operator==(const MapSet& o) const {
    return affordance == o.affordance && avoidance == o.avoidance && rotation == o.rotation &&
           velocity == o.velocity && gripper == o.gripper && entity == o.entity;
  }
};

/// One execute() or reset_to_default_pose() issued by a composer program.
/// Maps are held as sources so they can be rebuilt on a newer state.
struct ExecutionStep {
  bool reset = false;
  EntityRef entity;
  std::vector<MapSource> maps;
};

struct Composition {
  std::string subtask;
  std::vector<ExecutionStep> steps;
  /// Steps evaluated on the state passed to compose(); resets are skipped.
  std::vector<MapSet> maps;
};

class LmpRuntime {
 public:
  explicit LmpRuntime(std::shared_ptr<ProgramSource> source,
                      std::shared_ptr<ProgramCache> cache = std::make_shared<ProgramCache>(), InterpretOptions opt = {})
      : source_(std::move(source)), cache_(std::move(cache)), opt_(opt) {}

  ProgramCache& cache() { return *cache_; }
  ProgramSource& source() { return *source_; }
  long generations() const { return generations_; }

  /// Cache-first program text.
  std::string program_text(LmpKind kind, const std::string& query, const sim::WorldState& s, int sample = 0) {
    const ProgramCache::Key key{kind, query, scene_signature(s), sample};
    if (auto hit = cache_->find(key)) return *hit;
    ++generations_;
    std::string text = source_->generate(kind, query, sample);
    cache_->insert(key, text);
    return text;
  }

  const Program& program(LmpKind kind, const std::string& query, const sim::WorldState& s, int sample = 0) {
    const std::string text = program_text(kind, query, s, sample);
    auto it = parsed_.find(text);
    if (it == parsed_.end()) it = parsed_.emplace(text, parse_program(text)).first;
    return it->second;
  }

  RunResult run(LmpKind kind, const std::string& query, const sim::WorldState& s, int sample = 0) {
    const Program& p = program(kind, query, s, sample);
    return interpret(p, s, kind, nested_for(s), opt_);
  }

  /// Planner LMP: ordered sub-task texts.
  std::vector<std::string> plan_subtasks(const std::string& instruction, const sim::WorldState& s, int sample = 0) {
    if (instruction.empty()) fail(ErrorKind::invalid_input, "empty instruction");
    RunResult r = run(LmpKind::planner, instruction, s, sample);
    if (!r.subtasks.empty()) return r.subtasks;
    if (r.returned.type == ValueType::list && !r.returned.items.empty()) {
      std::vector<std::string> out;
      for (const auto& v : r.returned.items) {
        if (v.type != ValueType::string) fail(ErrorKind::contract_violation, "planner returned a non-string sub-task");
        out.push_back(v.str);
      }
      return out;
    }
    fail(ErrorKind::contract_violation, "planner program produced no sub-tasks");
  }

  /// Composer LMP: runs the program, which triggers the per-map LMPs, and
  /// evaluates every execute() on `s`.
  Composition compose(const std::string& subtask, const sim::WorldState& s, int sample = 0) {
    if (subtask.empty()) fail(ErrorKind::invalid_input, "empty sub-task");
    RunResult r = run(LmpKind::composer, subtask, s, sample);
    Composition c;
    c.subtask = subtask;
    for (const auto& call : r.calls) {
      ExecutionStep step;
      step.reset = call.reset;
      if (!call.reset) {
        const Value& m = call.movable;
        const Value* name = m.field("name");
        if (!name || name->type != ValueType::string) fail(ErrorKind::composition, "movable has no name");
        step.entity = {entity_kind_of(name->str), m.query.empty() ? name->str : m.query, name->str};
        for (const auto& [kind, box] : call.maps) {
          if (!box->source) fail(ErrorKind::composition, "map passed to execute() has no generating query");
          step.maps.push_back(*box->source);
        }
        if (std::none_of(step.maps.begin(), step.maps.end(),
                         [](const MapSource& m) { return m.kind == LmpKind::affordance; }))
          fail(ErrorKind::composition, "execute() for '" + subtask + "' has no affordance map");
      }
      c.steps.push_back(std::move(step));
    }
    if (c.steps.empty()) fail(ErrorKind::composition, "composer program for '" + subtask + "' executed nothing");
    for (const auto& step : c.steps)
      if (!step.reset) c.maps.push_back(evaluate(step, s));
    return c;
  }

  /// Re-evaluates a step's entity and maps against `s`. Programs come from
  /// the cache, so no generation happens after compose().
  MapSet evaluate(const ExecutionStep& step, const sim::WorldState& s) {
    MapSet out;
    out.entity = resolve_entity(step.entity, s);
    for (const auto& src : step.maps) {
      const ValueMap raw = build_map(src, s);
      out.get(raw.kind()) = post_process(src, raw);
    }
    if (!out.affordance) fail(ErrorKind::composition, "no affordance map");
    return out;
  }

  EntityRef resolve_entity(const EntityRef& e, const sim::WorldState& s) {
    const Value v = run_query(e.query, s);
    const Value* name = v.field("name");
    if (!name) fail(ErrorKind::composition, "parse_query_obj result has no name");
    return {entity_kind_of(name->str), e.query, name->str};
  }

  ValueMap build_map(const MapSource& src, const sim::WorldState& s) {
    RunResult r = run(src.kind, src.query, s);
    const auto mk = map_kind_of(src.kind);
    if (r.returned.type != ValueType::map || r.returned.map->map.kind() != *mk)
      fail(ErrorKind::contract_violation, std::string(to_string(src.kind)) + " program for '" + src.query +
                                              "' must return a " + std::string(vxp::to_string(*mk)) + " map");
    return r.returned.map->map;
  }

 private:
  std::shared_ptr<ProgramSource> source_;
  std::shared_ptr<ProgramCache> cache_;
  InterpretOptions opt_;
  long generations_ = 0;
  std::map<std::string, Program> parsed_;
  /// Last raw map per source and its processed form. Densify and smooth are
  /// the expensive part of a replan and are skipped when the raw map repeats.
  std::map<std::pair<LmpKind, std::string>, std::pair<ValueMap, ValueMap>> processed_;

  Value run_query(const std::string& q, const sim::WorldState& s) {
    RunResult r = run(LmpKind::parse_query_obj, q, s);
    Value v = r.returned;
    if (v.type == ValueType::list) {
      if (v.items.empty()) fail(ErrorKind::perception_failure, "no object detected for '" + q + "'");
      v = v.items[0];
    }
    if (v.type != ValueType::record) fail(ErrorKind::contract_violation, "parse_query_obj must return a detection");
    v.query = q;
    return v;
  }

  ValueMap post_process(const MapSource& src, const ValueMap& raw) {
    if (raw.kind() != MapKind::affordance && raw.kind() != MapKind::avoidance) return raw;
    const auto key = std::make_pair(src.kind, src.query);
    auto it = processed_.find(key);
    if (it != processed_.end() && it->second.first == raw) return it->second.second;
    ValueMap done = raw.kind() == MapKind::affordance ? densify_affordance(raw) : smooth_avoidance(raw);
    if (done.kind() == MapKind::affordance && done.empty_target)
      fail(ErrorKind::composition, "affordance map for '" + src.query + "' is empty");
    processed_.insert_or_assign(key, std::make_pair(raw, done));
    return done;
  }

  NestedCall nested_for(const sim::WorldState& s) {
    return [this, &s](LmpKind kind, const std::string& q) -> Value {
      if (kind == LmpKind::parse_query_obj) return run_query(q, s);
      auto box = std::make_shared<MapBox>();
      box->map = build_map({kind, q}, s);
      box->source = MapSource{kind, q};
      return Value::of_map(box);
    };
  }
};

}  // namespace vxp::lmp
