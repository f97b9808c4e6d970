#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "vxp/common/error.hpp"
#include "vxp/sim/world.hpp"

namespace vxp::sim {

enum class Split { seen, unseen };
enum class Category { object_interaction, spatial_composition };

inline std::string_view to_string(Split s) { return s == Split::seen ? "seen" : "unseen"; }
inline std::string_view to_string(Category c) {
  return c == Category::object_interaction ? "object_interaction" : "spatial_composition";
}

struct TemplateInfo {
  std::string id;
  std::string text;
  Category category;
  /// Whether the instruction itself appears among the fixture examples.
  bool seen_instruction;
  /// Suite templates are the 13 benchmark rows; the rest are analogues.
  bool in_suite;
};

inline const std::vector<TemplateInfo>& templates() {
  using C = Category;
  static const std::vector<TemplateInfo> t = {
      {"move_preposition", "move to the [preposition] the [obj]", C::spatial_composition, true, true},
      {"move_stay_side", "move to the [pos] while staying on the [preposition] the [obj]", C::spatial_composition, true, true},
      {"move_velocity_near", "move to the [pos] while moving at [velocity] when within [dist]cm from the [obj]",
       C::spatial_composition, true, true},
      {"close_drawer", "close the [deixis] drawer by pushing", C::object_interaction, true, true},
      {"push_along_line", "push the [obj] along the [line]", C::object_interaction, true, true},
      {"grasp_velocity", "grasp the [obj] from the table at [velocity]", C::object_interaction, true, true},
      {"drop_at_pos", "drop the [obj] to the [pos]", C::object_interaction, true, true},
      {"push_stay_region", "push the [obj] while letting it stay on [region]", C::object_interaction, true, true},
      {"move_region", "move to the [region]", C::spatial_composition, false, true},
      {"move_keep_distance", "move to the [pos] while staying at least [dist]cm from the [obj]", C::spatial_composition,
       false, true},
      {"move_velocity_region", "move to the [pos] while moving at [velocity] in the [region]", C::spatial_composition,
       false, true},
      {"push_avoid", "push the [obj] to the [pos] while staying away from [obstacle]", C::object_interaction, false, true},
      {"push_to_pos", "push the [obj] to the [pos]", C::object_interaction, false, true},
      {"move_avoid_item", "move to the top of the [item] while staying away from the [other]", C::spatial_composition,
       true, false},
      {"close_drawer_plain", "close the [deixis] drawer", C::object_interaction, true, false},
      {"sweep_to_region", "sweep the [obj] into the [region]", C::object_interaction, true, false},
      {"open_door", "open the door", C::object_interaction, true, false},
  };
  return t;
}

inline const TemplateInfo& template_info(std::string_view id) {
  for (const auto& t : templates())
    if (t.id == id) return t;
  fail(ErrorKind::invalid_input, "unknown task template '" + std::string(id) + "'");
}

/// Attribute values per slot and split. Suite runs draw bindings from these.
inline const std::vector<std::string>& attribute_values(std::string_view slot, Split split) {
  using V = std::vector<std::string>;
  static const std::map<std::string, std::pair<V, V>, std::less<>> table = {
      {"pos",
       {{"back left corner of the table", "front right corner of the table", "right side of the table",
         "back side of the table"},
        {"back right corner of the table", "front left corner of the table", "left side of the table",
         "front side of the table"}}},
      {"obj",
       {{"blue block", "green block", "yellow block", "pink block", "brown block"},
        {"red block", "orange block", "purple block", "cyan block", "gray block"}}},
      {"preposition", {{"left of", "front side of", "top of"}, {"right of", "back side of"}}},
      {"deixis", {{"topmost", "second to the bottom"}, {"bottommost", "second to the top"}}},
      {"dist", {{"3", "5", "7", "9", "11"}, {"4", "6", "8", "10"}}},
      {"region",
       {{"right side of the table", "back side of the table"}, {"left side of the table", "front side of the table"}}},
      {"velocity", {{"faster speed", "a quarter of the speed"}, {"slower speed", "3x speed"}}},
      {"line", {{"blue line", "green line", "yellow line", "pink line", "brown line"},
                {"red line", "orange line", "purple line", "cyan line", "gray line"}}},
      {"item", {{"apple", "banana", "yellow bowl", "headphones", "mug", "wood block"},
                {"apple", "banana", "yellow bowl", "headphones", "mug", "wood block"}}},
      {"plain_deixis", {{"top", "bottom"}, {"top", "bottom"}}},
  };
  auto it = table.find(slot);
  if (it == table.end()) fail(ErrorKind::invalid_input, "unknown attribute slot '" + std::string(slot) + "'");
  return split == Split::seen ? it->second.first : it->second.second;
}

inline const std::vector<std::string>& all_colors() {
  static const std::vector<std::string> c = {"blue", "green", "yellow", "pink", "brown",
                                             "red",  "orange", "purple", "cyan", "gray"};
  return c;
}

inline double velocity_scale_of(std::string_view phrase) {
  if (phrase == "faster speed") return 1.5;
  if (phrase == "a quarter of the speed") return 0.25;
  if (phrase == "slower speed") return 0.5;
  if (phrase == "3x speed") return 3.0;
  fail(ErrorKind::invalid_input, "unknown velocity phrase '" + std::string(phrase) + "'");
}

struct TaskSpec {
  std::string template_id;
  std::map<std::string, std::string> bindings;
  Split split = Split::seen;
  bool disturbances = false;
  /// Explicit schedule; when empty and `disturbances` is set, reset derives one.
  std::vector<DisturbanceEvent> schedule;
  std::vector<std::string> observation;

  bool operator==(const TaskSpec&) const = default;

  const std::string& at(const std::string& slot) const {
    auto it = bindings.find(slot);
    if (it == bindings.end()) fail(ErrorKind::invalid_input, "task is missing binding [" + slot + "]");
    return it->second;
  }
  bool has(const std::string& slot) const { return bindings.count(slot) != 0; }

  Category category() const { return template_info(template_id).category; }

  std::string instruction() const {
    std::string out = template_info(template_id).text;
    for (std::size_t pos = out.find('['); pos != std::string::npos; pos = out.find('[', pos)) {
      const auto end = out.find(']', pos);
      const std::string slot = out.substr(pos + 1, end - pos - 1);
      const std::string& v = at(slot);
      out.replace(pos, end - pos + 1, v);
      pos += v.size();
    }
    return out;
  }
};

/// Slots referenced by a template in order of appearance.
inline std::vector<std::string> template_slots(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t pos = text.find('['); pos != std::string::npos; pos = text.find('[', pos + 1))
    out.push_back(text.substr(pos + 1, text.find(']', pos) - pos - 1));
  return out;
}

/// Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Deterministically draws bindings for episode `index` of a template.
inline TaskSpec make_task(const std::string& template_id, Split split, std::uint64_t index, bool disturbances = false) {
  const TemplateInfo& info = template_info(template_id);
  TaskSpec t;
  t.template_id = template_id;
  t.split = split;
  t.disturbances = disturbances;
  std::mt19937_64 rng(fnv1a(template_id, index * 0x9e3779b97f4a7c15ull + (split == Split::seen ? 1 : 2)));
  for (const auto& slot : template_slots(info.text)) {
    std::string source = slot;
    if (slot == "obstacle") source = "obj";
    if (slot == "other") source = "item";
    if (slot == "deixis" && template_id == "close_drawer_plain") source = "plain_deixis";
    const auto& values = attribute_values(source, split);
    std::string v;
    do {
      v = values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)];
    } while ((slot == "obstacle" && v == t.bindings["obj"]) || (slot == "other" && v == t.bindings["item"]));
    t.bindings[slot] = v;
  }
  return t;
}

// JSON task files -----------------------------------------------------------

inline void to_json(nlohmann::json& j, const DisturbanceEvent& e) {
  j = {{"kind", to_string(e.kind)}, {"schedule", e.schedule}, {"target", e.target},
       {"vector", {e.vector.x, e.vector.y, e.vector.z}}};
  if (e.joint_trigger) j["joint_trigger"] = *e.joint_trigger;
}

inline void from_json(const nlohmann::json& j, DisturbanceEvent& e) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "robot_force") e.kind = DisturbanceKind::robot_force;
  else if (kind == "object_displacement") e.kind = DisturbanceKind::object_displacement;
  else if (kind == "progress_reversal") e.kind = DisturbanceKind::progress_reversal;
  else fail(ErrorKind::invalid_input, "unknown disturbance kind '" + kind + "'");
  e.schedule = j.value("schedule", 0L);
  if (e.schedule < 0) fail(ErrorKind::invalid_input, "disturbance schedule must be >= 0");
  e.target = j.value("target", std::string{});
  if (j.contains("vector")) {
    const auto& v = j.at("vector");
    e.vector = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
  }
  if (j.contains("joint_trigger")) e.joint_trigger = j.at("joint_trigger").get<double>();
}

inline void to_json(nlohmann::json& j, const TaskSpec& t) {
  j = {{"template", t.template_id},
       {"bindings", t.bindings},
       {"split", to_string(t.split)},
       {"disturbances", t.disturbances},
       {"schedule", t.schedule},
       {"observation", t.observation}};
}

inline void from_json(const nlohmann::json& j, TaskSpec& t) {
  t.template_id = j.at("template").get<std::string>();
  const TemplateInfo& info = template_info(t.template_id);
  t.bindings = j.value("bindings", std::map<std::string, std::string>{});
  const std::string split = j.value("split", std::string("seen"));
  if (split != "seen" && split != "unseen") fail(ErrorKind::invalid_input, "split must be seen or unseen");
  t.split = split == "seen" ? Split::seen : Split::unseen;
  t.disturbances = j.value("disturbances", false);
  t.schedule = j.value("schedule", std::vector<DisturbanceEvent>{});
  t.observation = j.value("observation", std::vector<std::string>{});
  for (const auto& slot : template_slots(info.text))
    if (!t.has(slot)) fail(ErrorKind::invalid_input, "task file is missing binding [" + slot + "]");
}

}  // namespace vxp::sim
