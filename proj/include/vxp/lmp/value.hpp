#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vxp/common/error.hpp"
#include "vxp/voxel/value_map.hpp"

namespace vxp::lmp {

enum class LmpKind { planner, composer, parse_query_obj, affordance, avoidance, rotation, velocity, gripper };

inline constexpr LmpKind kAllKinds[] = {LmpKind::planner,    LmpKind::composer,  LmpKind::parse_query_obj,
                                        LmpKind::affordance, LmpKind::avoidance, LmpKind::rotation,
                                        LmpKind::velocity,   LmpKind::gripper};

inline std::string_view to_string(LmpKind k) {
  switch (k) {
    case LmpKind::planner: return "planner";
    case LmpKind::composer: return "composer";
    case LmpKind::parse_query_obj: return "parse_query_obj";
    case LmpKind::affordance: return "affordance";
    case LmpKind::avoidance: return "avoidance";
    case LmpKind::rotation: return "rotation";
    case LmpKind::velocity: return "velocity";
    case LmpKind::gripper: return "gripper";
  }
  return "?";
}

inline LmpKind lmp_kind_from(std::string_view s) {
  for (LmpKind k : kAllKinds)
    if (to_string(k) == s) return k;
  fail(ErrorKind::invalid_input, "unknown LMP kind '" + std::string(s) + "'");
}

inline std::optional<MapKind> map_kind_of(LmpKind k) {
  switch (k) {
    case LmpKind::affordance: return MapKind::affordance;
    case LmpKind::avoidance: return MapKind::avoidance;
    case LmpKind::rotation: return MapKind::rotation;
    case LmpKind::velocity: return MapKind::velocity;
    case LmpKind::gripper: return MapKind::gripper;
    default: return std::nullopt;
  }
}

inline LmpKind lmp_kind_of(MapKind k) {
  switch (k) {
    case MapKind::affordance: return LmpKind::affordance;
    case MapKind::avoidance: return LmpKind::avoidance;
    case MapKind::rotation: return LmpKind::rotation;
    case MapKind::velocity: return LmpKind::velocity;
    case MapKind::gripper: return LmpKind::gripper;
  }
  return LmpKind::affordance;
}

/// Where a map came from, so it can be rebuilt against a newer state.
struct MapSource {
  LmpKind kind;
  std::string query;
  bool operator==(const MapSource&) const = default;
};

struct MapBox {
  ValueMap map{MapKind::affordance, GridSpec{}};
  std::optional<MapSource> source;
};

enum class ValueType { none, boolean, number, string, list, record, map };

inline std::string_view to_string(ValueType t) {
  switch (t) {
    case ValueType::none: return "None";
    case ValueType::boolean: return "bool";
    case ValueType::number: return "number";
    case ValueType::string: return "string";
    case ValueType::list: return "list";
    case ValueType::record: return "record";
    case ValueType::map: return "map";
  }
  return "?";
}

/// Program values. Lists and records are copied on assignment; maps are
/// shared handles into the MapSet under construction.
struct Value {
  ValueType type = ValueType::none;
  double num = 0.0;
  std::string str;
  std::vector<Value> items;
  std::vector<std::pair<std::string, Value>> fields;
  std::shared_ptr<MapBox> map;
  /// Set on lists returned by detect(); indexing an empty one is a
  /// perception failure rather than a type error.
  bool from_detect = false;
  /// Query text that produced a detection list or record.
  std::string query;

  static Value none() { return {}; }
  static Value boolean(bool b) {
    Value v;
    v.type = ValueType::boolean;
    v.num = b ? 1.0 : 0.0;
    return v;
  }
  static Value number(double d) {
    Value v;
    v.type = ValueType::number;
    v.num = d;
    return v;
  }
  static Value string(std::string s) {
    Value v;
    v.type = ValueType::string;
    v.str = std::move(s);
    return v;
  }
  static Value list(std::vector<Value> items = {}) {
    Value v;
    v.type = ValueType::list;
    v.items = std::move(items);
    return v;
  }
  static Value record(std::vector<std::pair<std::string, Value>> fields) {
    Value v;
    v.type = ValueType::record;
    v.fields = std::move(fields);
    return v;
  }
  static Value vec(const Vec3& p) { return list({number(p.x), number(p.y), number(p.z)}); }
  static Value quat(const Quat& q) { return list({number(q.w), number(q.x), number(q.y), number(q.z)}); }
  static Value of_map(std::shared_ptr<MapBox> m) {
    Value v;
    v.type = ValueType::map;
    v.map = std::move(m);
    return v;
  }

  const Value* field(std::string_view name) const {
    for (const auto& [k, v] : fields)
      if (k == name) return &v;
    return nullptr;
  }
  Value* field(std::string_view name) {
    for (auto& [k, v] : fields)
      if (k == name) return &v;
    return nullptr;
  }

  bool truthy() const {
    switch (type) {
      case ValueType::none: return false;
      case ValueType::boolean:
      case ValueType::number: return num != 0.0;
      case ValueType::string: return !str.empty();
      case ValueType::list: return !items.empty();
      case ValueType::record:
      case ValueType::map: return true;
    }
    return false;
  }
};

inline bool deep_equal(const Value& a, const Value& b) {
  const bool numeric_a = a.type == ValueType::number || a.type == ValueType::boolean;
  const bool numeric_b = b.type == ValueType::number || b.type == ValueType::boolean;
  if (numeric_a && numeric_b) return a.num == b.num;
  if (a.type != b.type) return false;
  switch (a.type) {
    case ValueType::none: return true;
    case ValueType::string: return a.str == b.str;
    case ValueType::list:
      if (a.items.size() != b.items.size()) return false;
      for (std::size_t i = 0; i < a.items.size(); ++i)
        if (!deep_equal(a.items[i], b.items[i])) return false;
      return true;
    case ValueType::record:
      if (a.fields.size() != b.fields.size()) return false;
      for (std::size_t i = 0; i < a.fields.size(); ++i)
        if (a.fields[i].first != b.fields[i].first || !deep_equal(a.fields[i].second, b.fields[i].second))
          return false;
      return true;
    case ValueType::map: return a.map == b.map;
    default: return false;
  }
}

/// Approximate element count, used to charge the step budget.
inline std::size_t value_size(const Value& v) {
  switch (v.type) {
    case ValueType::string: return v.str.size();
    case ValueType::list: {
      std::size_t n = 1;
      for (const auto& i : v.items) n += value_size(i);
      return n;
    }
    case ValueType::record: {
      std::size_t n = 1;
      for (const auto& [k, f] : v.fields) n += value_size(f);
      return n;
    }
    default: return 1;
  }
}

}  // namespace vxp::lmp
