#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vxp/lmp/ast.hpp"
#include "vxp/lmp/parser.hpp"
#include "vxp/lmp/value.hpp"
#include "vxp/sim/world.hpp"
#include "vxp/voxel/grid.hpp"
#include "vxp/voxel/value_map.hpp"

namespace vxp::lmp {

/// Shortest-arc rotation of the down-pointing tool axis onto `v`.
inline Quat pointat2quat(const Vec3& v) {
  if (!is_finite(v) || norm(v) == 0.0) fail(ErrorKind::invalid_input, "pointat2quat: zero vector");
  return rotation_between({0, 0, -1}, v);
}

struct ExecuteCall {
  bool reset = false;
  Value movable;
  std::vector<std::pair<MapKind, std::shared_ptr<MapBox>>> maps;
};

struct RunResult {
  Value returned;
  std::vector<std::string> subtasks;
  std::vector<ExecuteCall> calls;
  long steps = 0;
};

struct InterpretOptions {
  long step_budget = 1'000'000;
  int max_maps = 8;
  /// Voxels written per charged step by the map-writing calls.
  long voxels_per_step = 100;
};

/// Resolves a nested LMP call (parse_query_obj / get_*_map) to a value.
using NestedCall = std::function<Value(LmpKind, const std::string&)>;

class Interpreter {
 public:
  Interpreter(const sim::WorldState& state, LmpKind kind, NestedCall nested = {}, InterpretOptions opt = {})
      : state_(state), kind_(kind), nested_(std::move(nested)), opt_(opt) {}

  RunResult run(const Program& p) {
    out_ = {};
    vars_.clear();
    steps_ = 0;
    maps_made_ = 0;
    returned_ = false;
    exec_block(p.body);
    out_.steps = steps_;
    return std::move(out_);
  }

 private:
  const sim::WorldState& state_;
  LmpKind kind_;
  NestedCall nested_;
  InterpretOptions opt_;
  std::map<std::string, Value> vars_;
  RunResult out_;
  long steps_ = 0;
  int maps_made_ = 0;
  bool returned_ = false;

  const GridSpec& spec() const { return state_.spec; }

  void charge(long n, SourceLoc loc) {
    steps_ += n;
    if (steps_ > opt_.step_budget)
      fail_at(ErrorKind::step_budget, loc, "step budget of " + std::to_string(opt_.step_budget) + " exceeded");
  }

  [[noreturn]] static void type_error(SourceLoc loc, const std::string& msg) {
    fail_at(ErrorKind::type_error, loc, msg);
  }

  void exec_block(const Block& b) {
    for (const auto& s : b) {
      exec(*s);
      if (returned_) return;
    }
  }

  void exec(const Stmt& s) {
    charge(1, s.loc);
    switch (s.kind) {
      case StmtKind::pass: return;
      case StmtKind::expr: eval(*s.value); return;
      case StmtKind::ret:
        out_.returned = s.value ? eval(*s.value) : Value::none();
        returned_ = true;
        return;
      case StmtKind::assign: {
        Value v = eval(*s.value);
        assign(*s.target, std::move(v));
        return;
      }
      case StmtKind::if_:
        if (eval(*s.value).truthy()) exec_block(s.body);
        else exec_block(s.orelse);
        return;
      case StmtKind::for_: {
        std::vector<Value> items;
        if (s.value->kind == ExprKind::call && s.value->text == "range") {
          std::vector<double> a;
          for (const auto& e : s.value->args) a.push_back(eval(*e).num);
          const double start = a.size() > 1 ? a[0] : 0.0;
          const double stop = a.size() > 1 ? a[1] : a[0];
          const double step = a.size() > 2 ? a[2] : 1.0;
          if (step == 0.0) type_error(s.value->loc, "range() step must not be zero");
          const double count = std::max(0.0, std::ceil((stop - start) / step));
          if (count > static_cast<double>(kMaxLoopCount))
            fail_at(ErrorKind::unbounded_loop, s.value->loc, "range() exceeds the loop bound");
          for (long i = 0; i < static_cast<long>(count); ++i) {
            vars_[s.name] = Value::number(start + step * static_cast<double>(i));
            exec_block(s.body);
            if (returned_) return;
            charge(1, s.loc);
          }
          return;
        }
        const Value it = eval(*s.value);
        if (it.type != ValueType::list) type_error(s.value->loc, "for loops iterate over lists");
        // Iterate over a snapshot; the body cannot extend the loop.
        for (const Value& v : it.items) {
          vars_[s.name] = v;
          exec_block(s.body);
          if (returned_) return;
          charge(1, s.loc);
        }
        return;
      }
    }
  }

  Value* lvalue(const Expr& e) {
    switch (e.kind) {
      case ExprKind::name: return &vars_[e.text];
      case ExprKind::attr: {
        Value* base = lvalue_existing(*e.args[0]);
        if (base->type != ValueType::record) type_error(e.loc, "only record fields can be assigned");
        Value* f = base->field(e.text);
        if (!f) {
          base->fields.emplace_back(e.text, Value::none());
          f = &base->fields.back().second;
        }
        return f;
      }
      case ExprKind::index: {
        Value* base = lvalue_existing(*e.args[0]);
        if (base->type != ValueType::list) type_error(e.loc, "only list elements can be assigned");
        return &base->items[index_of(*base, eval(*e.args[1]), e.loc)];
      }
      default: type_error(e.loc, "cannot assign to this expression");
    }
  }

  Value* lvalue_existing(const Expr& e) {
    if (e.kind == ExprKind::name) {
      auto it = vars_.find(e.text);
      if (it == vars_.end()) fail_at(ErrorKind::type_error, e.loc, "undefined name '" + e.text + "'");
      return &it->second;
    }
    if (e.kind == ExprKind::attr || e.kind == ExprKind::index) return lvalue(e);
    type_error(e.loc, "cannot assign into a temporary value");
  }

  void assign(const Expr& target, Value v) { *lvalue(target) = std::move(v); }

  std::size_t index_of(const Value& list, const Value& idx, SourceLoc loc) {
    if (idx.type != ValueType::number || idx.num != std::floor(idx.num)) type_error(loc, "list index must be an integer");
    const long n = static_cast<long>(list.items.size());
    long i = static_cast<long>(idx.num);
    if (i < 0) i += n;
    if (i < 0 || i >= n) {
      if (list.from_detect && n == 0)
        fail_at(ErrorKind::perception_failure, loc, "no object detected for '" + list.query + "'");
      type_error(loc, "list index " + std::to_string(static_cast<long>(idx.num)) + " out of range");
    }
    return static_cast<std::size_t>(i);
  }

  double number(const Value& v, SourceLoc loc, const char* what) {
    if (v.type != ValueType::number && v.type != ValueType::boolean)
      type_error(loc, std::string(what) + " must be a number, got " + std::string(to_string(v.type)));
    if (!std::isfinite(v.num)) type_error(loc, std::string(what) + " must be finite");
    return v.num;
  }

  std::string text(const Value& v, SourceLoc loc, const char* what) {
    if (v.type != ValueType::string) type_error(loc, std::string(what) + " must be a string");
    return v.str;
  }

  Vec3 vec3(const Value& v, SourceLoc loc, const char* what) {
    if (v.type != ValueType::list || v.items.size() != 3)
      type_error(loc, std::string(what) + " must be a list of 3 numbers");
    return {number(v.items[0], loc, what), number(v.items[1], loc, what), number(v.items[2], loc, what)};
  }

  VoxelIndex voxel(const Value& v, SourceLoc loc, const char* what) {
    const Vec3 p = vec3(v, loc, what);
    return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y)), static_cast<int>(std::floor(p.z))};
  }

  Value eval(const Expr& e) {
    charge(1, e.loc);
    switch (e.kind) {
      case ExprKind::number: return Value::number(e.number);
      case ExprKind::string: return Value::string(e.text);
      case ExprKind::boolean: return Value::boolean(e.number != 0.0);
      case ExprKind::none: return Value::none();
      case ExprKind::name: {
        auto it = vars_.find(e.text);
        if (it == vars_.end()) fail_at(ErrorKind::type_error, e.loc, "undefined name '" + e.text + "'");
        charge(static_cast<long>(value_size(it->second)), e.loc);
        return it->second;
      }
      case ExprKind::list: {
        std::vector<Value> items;
        for (const auto& a : e.args) items.push_back(eval(*a));
        return Value::list(std::move(items));
      }
      case ExprKind::unary: {
        const Value v = eval(*e.args[0]);
        if (e.text == "not") return Value::boolean(!v.truthy());
        if (e.text == "+") return Value::number(number(v, e.loc, "operand"));
        if (v.type == ValueType::list) return elementwise(v, Value::number(-1), "*", e.loc);
        return Value::number(-number(v, e.loc, "operand"));
      }
      case ExprKind::binary: return binary(e);
      case ExprKind::attr: {
        const Value base = eval(*e.args[0]);
        if (base.type != ValueType::record) type_error(e.loc, "field access on a " + std::string(to_string(base.type)));
        const Value* f = base.field(e.text);
        if (!f) type_error(e.loc, "record has no field '" + e.text + "'");
        return *f;
      }
      case ExprKind::index: {
        const Value base = eval(*e.args[0]);
        const Value idx = eval(*e.args[1]);
        if (base.type == ValueType::string) {
          Value as_list = Value::list(std::vector<Value>(base.str.size()));
          const std::size_t i = index_of(as_list, idx, e.loc);
          return Value::string(std::string(1, base.str[i]));
        }
        if (base.type != ValueType::list) type_error(e.loc, "cannot index a " + std::string(to_string(base.type)));
        return base.items[index_of(base, idx, e.loc)];
      }
      case ExprKind::call: return call(e);
    }
    return Value::none();
  }

  Value elementwise(const Value& a, const Value& b, const std::string& op, SourceLoc loc) {
    auto scalar = [&](double x, double y) {
      if (op == "+") return x + y;
      if (op == "-") return x - y;
      if (op == "*") return x * y;
      if (op == "/") {
        if (y == 0.0) type_error(loc, "division by zero");
        return x / y;
      }
      type_error(loc, "operator '" + op + "' is not defined on lists");
    };
    if (a.type == ValueType::list && b.type == ValueType::list) {
      if (a.items.size() != b.items.size()) type_error(loc, "list lengths differ in elementwise '" + op + "'");
      std::vector<Value> out;
      for (std::size_t i = 0; i < a.items.size(); ++i)
        out.push_back(Value::number(scalar(number(a.items[i], loc, "list element"), number(b.items[i], loc, "list element"))));
      charge(static_cast<long>(out.size()), loc);
      return Value::list(std::move(out));
    }
    const bool left_list = a.type == ValueType::list;
    const Value& l = left_list ? a : b;
    const double s = number(left_list ? b : a, loc, "scalar operand");
    std::vector<Value> out;
    for (const auto& x : l.items) {
      const double v = number(x, loc, "list element");
      out.push_back(Value::number(left_list ? scalar(v, s) : scalar(s, v)));
    }
    charge(static_cast<long>(out.size()), loc);
    return Value::list(std::move(out));
  }

  Value binary(const Expr& e) {
    const std::string& op = e.text;
    if (op == "and") {
      Value l = eval(*e.args[0]);
      return l.truthy() ? eval(*e.args[1]) : l;
    }
    if (op == "or") {
      Value l = eval(*e.args[0]);
      return l.truthy() ? l : eval(*e.args[1]);
    }
    const Value a = eval(*e.args[0]);
    const Value b = eval(*e.args[1]);
    if (op == "==") return Value::boolean(deep_equal(a, b));
    if (op == "!=") return Value::boolean(!deep_equal(a, b));
    if (op == "in" || op == "not in") {
      bool found = false;
      if (b.type == ValueType::string) {
        found = b.str.find(text(a, e.loc, "left operand of 'in'")) != std::string::npos;
      } else if (b.type == ValueType::list) {
        for (const auto& x : b.items) found = found || deep_equal(a, x);
        charge(static_cast<long>(b.items.size()), e.loc);
      } else {
        type_error(e.loc, "'in' needs a string or list on the right");
      }
      return Value::boolean(op == "in" ? found : !found);
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      if (a.type == ValueType::string && b.type == ValueType::string) {
        const int c = a.str.compare(b.str);
        return Value::boolean(op == "<" ? c < 0 : op == "<=" ? c <= 0 : op == ">" ? c > 0 : c >= 0);
      }
      const double x = number(a, e.loc, "comparison operand"), y = number(b, e.loc, "comparison operand");
      return Value::boolean(op == "<" ? x < y : op == "<=" ? x <= y : op == ">" ? x > y : x >= y);
    }
    if (op == "+" && a.type == ValueType::string && b.type == ValueType::string) {
      charge(static_cast<long>(a.str.size() + b.str.size()), e.loc);
      return Value::string(a.str + b.str);
    }
    if (a.type == ValueType::list || b.type == ValueType::list) return elementwise(a, b, op, e.loc);
    const double x = number(a, e.loc, "left operand"), y = number(b, e.loc, "right operand");
    double r = 0.0;
    if (op == "+") r = x + y;
    else if (op == "-") r = x - y;
    else if (op == "*") r = x * y;
    else if (op == "/" || op == "//" || op == "%") {
      if (y == 0.0) type_error(e.loc, "division by zero");
      r = op == "/" ? x / y : op == "//" ? std::floor(x / y) : x - y * std::floor(x / y);
    } else if (op == "**") {
      r = std::pow(x, y);
    } else {
      type_error(e.loc, "unknown operator '" + op + "'");
    }
    if (!std::isfinite(r)) type_error(e.loc, "arithmetic overflow");
    return Value::number(r);
  }

  // -------------------------------------------------------------------------
  // Calls

  [[noreturn]] void unavailable(const Expr& e) {
    fail_at(ErrorKind::unknown_call, e.loc,
            "'" + e.text + "' is not available in " + std::string(to_string(kind_)) + " programs");
  }

  static bool is_map_kind(LmpKind k) { return map_kind_of(k).has_value(); }

  void need_args(const Expr& e, std::size_t lo, std::size_t hi) {
    if (e.args.size() < lo || e.args.size() > hi)
      fail_at(ErrorKind::type_error, e.loc, "'" + e.text + "' takes " + std::to_string(lo) +
                                                (lo == hi ? "" : " to " + std::to_string(hi)) + " arguments");
    if (e.text != "execute" && !e.kwargs.empty())
      fail_at(ErrorKind::type_error, e.loc, "'" + e.text + "' takes no keyword arguments");
  }

  Value detection_value(const sim::DetectionRecord& r) const {
    const Value center = Value::vec(world_to_voxel_space(r.center, spec()));
    std::vector<Value> occ;
    occ.reserve(r.occupancy.size());
    for (std::size_t i : r.occupancy) {
      const VoxelIndex v = spec().unlinear(i);
      occ.push_back(Value::list({Value::number(v.x), Value::number(v.y), Value::number(v.z)}));
    }
    Value aabb = Value::list({Value::vec(world_to_voxel_space(r.box.lo, spec())),
                              Value::vec(world_to_voxel_space(r.box.hi, spec()))});
    return Value::record({{"name", Value::string(r.name)},
                          {"center", center},
                          {"position", center},
                          {"normal", Value::vec(r.normal)},
                          {"aabb", aabb},
                          {"occupancy", Value::list(std::move(occ))}});
  }

  MapValue map_value(const Value& v, MapKind kind, SourceLoc loc) {
    if (kind == MapKind::rotation) {
      if (v.type != ValueType::list || v.items.size() != 4) type_error(loc, "rotation value must be a quaternion [w, x, y, z]");
      return MapValue::of(Quat{number(v.items[0], loc, "quaternion"), number(v.items[1], loc, "quaternion"),
                               number(v.items[2], loc, "quaternion"), number(v.items[3], loc, "quaternion")});
    }
    return MapValue::of(number(v, loc, "map value"));
  }

  std::shared_ptr<MapBox> map_arg(const Value& v, SourceLoc loc) {
    if (v.type != ValueType::map) type_error(loc, "expected a value map, got " + std::string(to_string(v.type)));
    return v.map;
  }

  Value empty_map_call(const Expr& e, MapKind kind) {
    if (kind_ != lmp_kind_of(kind)) unavailable(e);
    need_args(e, 0, 0);
    if (++maps_made_ > opt_.max_maps)
      fail_at(ErrorKind::step_budget, e.loc, "map allocation limit of " + std::to_string(opt_.max_maps) + " exceeded");
    charge(1000, e.loc);
    auto box = std::make_shared<MapBox>();
    box->map = empty_map(kind, spec(), PoseDefaults{state_.ee_rotation, state_.gripper});
    return Value::of_map(box);
  }

  Value nested(const Expr& e, LmpKind kind) {
    if (kind_ != LmpKind::composer) unavailable(e);
    need_args(e, 1, 1);
    const std::string q = text(eval(*e.args[0]), e.loc, "query");
    if (!nested_) fail_at(ErrorKind::contract_violation, e.loc, "no LMP resolver for '" + e.text + "'");
    Value v = nested_(kind, q);
    if (auto mk = map_kind_of(kind)) {
      if (v.type != ValueType::map || v.map->map.kind() != *mk)
        fail_at(ErrorKind::contract_violation, e.loc, "'" + e.text + "' did not produce a " +
                                                          std::string(vxp::to_string(*mk)) + " map");
    }
    return v;
  }

  Value call(const Expr& e) {
    const std::string& n = e.text;
    charge(1, e.loc);

    if (n == "len") {
      need_args(e, 1, 1);
      const Value v = eval(*e.args[0]);
      if (v.type == ValueType::list) return Value::number(static_cast<double>(v.items.size()));
      if (v.type == ValueType::string) return Value::number(static_cast<double>(v.str.size()));
      type_error(e.loc, "len() needs a list or string");
    }
    if (n == "abs") {
      need_args(e, 1, 1);
      return Value::number(std::abs(number(eval(*e.args[0]), e.loc, "abs() argument")));
    }
    if (n == "round" || n == "int") {
      need_args(e, 1, 1);
      const double x = number(eval(*e.args[0]), e.loc, "argument");
      return Value::number(n == "round" ? std::round(x) : std::trunc(x));
    }
    if (n == "min" || n == "max") {
      if (e.args.empty()) type_error(e.loc, n + "() needs arguments");
      std::vector<Value> vals;
      if (e.args.size() == 1) {
        const Value v = eval(*e.args[0]);
        if (v.type != ValueType::list || v.items.empty()) type_error(e.loc, n + "() of a single argument needs a nonempty list");
        vals = v.items;
      } else {
        for (const auto& a : e.args) vals.push_back(eval(*a));
      }
      double best = number(vals[0], e.loc, "argument");
      for (const auto& v : vals) {
        const double x = number(v, e.loc, "argument");
        best = n == "min" ? std::min(best, x) : std::max(best, x);
      }
      return Value::number(best);
    }
    if (n == "norm") {
      need_args(e, 1, 1);
      return Value::number(vxp::norm(vec3(eval(*e.args[0]), e.loc, "norm() argument")));
    }
    if (n == "normalize") {
      need_args(e, 1, 1);
      const Vec3 v = vec3(eval(*e.args[0]), e.loc, "normalize() argument");
      if (vxp::norm(v) == 0.0) fail_at(ErrorKind::invalid_input, e.loc, "normalize() of a zero vector");
      return Value::vec(vxp::normalized(v));
    }
    if (n == "detect") {
      need_args(e, 1, 1);
      const std::string q = text(eval(*e.args[0]), e.loc, "object name");
      std::vector<Value> recs;
      for (const auto& r : sim::detect(state_, q)) recs.push_back(detection_value(r));
      Value v = Value::list(std::move(recs));
      v.from_detect = true;
      v.query = q;
      charge(static_cast<long>(value_size(v)), e.loc);
      return v;
    }
    if (n == "cm2index") {
      need_args(e, 2, 2);
      const double cm = number(eval(*e.args[0]), e.loc, "cm");
      const Vec3 d = vec3(eval(*e.args[1]), e.loc, "direction");
      const VoxelIndex v = vxp::cm2index(cm, d, spec());
      return Value::list({Value::number(v.x), Value::number(v.y), Value::number(v.z)});
    }
    if (n == "index2cm") {
      need_args(e, 2, 2);
      const double idx = number(eval(*e.args[0]), e.loc, "index");
      return Value::number(vxp::index2cm(idx, vec3(eval(*e.args[1]), e.loc, "direction"), spec()));
    }
    if (n == "pointat2quat") {
      need_args(e, 1, 1);
      return Value::quat(pointat2quat(vec3(eval(*e.args[0]), e.loc, "direction")));
    }
    if (n == "get_empty_affordance_map") return empty_map_call(e, MapKind::affordance);
    if (n == "get_empty_avoidance_map") return empty_map_call(e, MapKind::avoidance);
    if (n == "get_empty_rotation_map") return empty_map_call(e, MapKind::rotation);
    if (n == "get_empty_velocity_map") return empty_map_call(e, MapKind::velocity);
    if (n == "get_empty_gripper_map") return empty_map_call(e, MapKind::gripper);
    if (n == "set_voxel_by_radius" || n == "set_voxel_by_box") {
      if (!is_map_kind(kind_)) unavailable(e);
      need_args(e, 4, 4);
      auto box = map_arg(eval(*e.args[0]), e.loc);
      std::size_t written = 0;
      if (n == "set_voxel_by_radius") {
        const VoxelIndex c = voxel(eval(*e.args[1]), e.loc, "center");
        const double r = number(eval(*e.args[2]), e.loc, "radius");
        written = vxp::set_voxel_by_radius(box->map, c, r, map_value(eval(*e.args[3]), box->map.kind(), e.loc));
      } else {
        const VoxelIndex lo = voxel(eval(*e.args[1]), e.loc, "box corner");
        const VoxelIndex hi = voxel(eval(*e.args[2]), e.loc, "box corner");
        written = vxp::set_voxel_by_box(box->map, lo, hi, map_value(eval(*e.args[3]), box->map.kind(), e.loc));
      }
      charge(static_cast<long>(written) / opt_.voxels_per_step, e.loc);
      return Value::none();
    }
    if (n == "composer") {
      if (kind_ != LmpKind::planner) unavailable(e);
      need_args(e, 1, 1);
      out_.subtasks.push_back(text(eval(*e.args[0]), e.loc, "sub-task"));
      return Value::none();
    }
    if (n == "parse_query_obj") return nested(e, LmpKind::parse_query_obj);
    if (n == "get_affordance_map") return nested(e, LmpKind::affordance);
    if (n == "get_avoidance_map") return nested(e, LmpKind::avoidance);
    if (n == "get_rotation_map") return nested(e, LmpKind::rotation);
    if (n == "get_velocity_map") return nested(e, LmpKind::velocity);
    if (n == "get_gripper_map") return nested(e, LmpKind::gripper);
    if (n == "reset_to_default_pose") {
      if (kind_ != LmpKind::composer) unavailable(e);
      need_args(e, 0, 0);
      ExecuteCall c;
      c.reset = true;
      out_.calls.push_back(std::move(c));
      return Value::none();
    }
    if (n == "execute") {
      if (kind_ != LmpKind::composer) unavailable(e);
      static const MapKind order[] = {MapKind::affordance, MapKind::avoidance, MapKind::rotation, MapKind::velocity,
                                      MapKind::gripper};
      if (e.args.empty() || e.args.size() > 6) type_error(e.loc, "execute() takes a movable and up to five maps");
      ExecuteCall c;
      c.movable = eval(*e.args[0]);
      if (c.movable.type == ValueType::list && c.movable.from_detect && !c.movable.items.empty())
        c.movable = c.movable.items[0];
      if (c.movable.type != ValueType::record) type_error(e.loc, "execute() needs a detected movable");
      auto add = [&](MapKind k, const Value& v) {
        if (v.type == ValueType::none) return;
        auto box = map_arg(v, e.loc);
        if (box->map.kind() != k)
          fail_at(ErrorKind::contract_violation, e.loc, "execute() got a " + std::string(vxp::to_string(box->map.kind())) +
                                                            " map where a " + std::string(vxp::to_string(k)) +
                                                            " map was expected");
        for (const auto& [kk, _] : c.maps)
          if (kk == k) type_error(e.loc, "execute() got two " + std::string(vxp::to_string(k)) + " maps");
        c.maps.emplace_back(k, box);
      };
      for (std::size_t i = 1; i < e.args.size(); ++i) add(order[i - 1], eval(*e.args[i]));
      for (const auto& [key, ex] : e.kwargs) {
        std::optional<MapKind> k;
        for (MapKind mk : order)
          if (key == std::string(vxp::to_string(mk)) + "_map") k = mk;
        if (!k) type_error(e.loc, "execute() has no parameter '" + key + "'");
        add(*k, eval(*ex));
      }
      out_.calls.push_back(std::move(c));
      return Value::none();
    }
    fail_at(ErrorKind::unknown_call, e.loc, "call to undeclared API '" + n + "'");
  }
};

/// Parses and runs `source` as an LMP of `kind`.
inline RunResult interpret(const Program& p, const sim::WorldState& state, LmpKind kind, NestedCall nested = {},
                           InterpretOptions opt = {}) {
  Interpreter in(state, kind, std::move(nested), opt);
  return in.run(p);
}

}  // namespace vxp::lmp
