#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vxp/lmp/interpreter.hpp"
#include "vxp/lmp/parser.hpp"
#include "vxp/sim/tasks.hpp"

namespace adversarial {

/// One corpus program. Headers: "# kind: <lmp kind>" and
/// "# expect: <error kind>|contained".
struct Case {
  std::string name, kind, expect, text;
};

struct Outcome {
  std::string observed;
  bool state_unchanged = true;
  double seconds = 0.0;
  bool ok(const Case& c) const { return observed == c.expect && state_unchanged; }
};

inline std::string header(const std::string& text, const std::string& key) {
  std::istringstream is(text);
  std::string line;
  const std::string tag = "# " + key + ": ";
  while (std::getline(is, line))
    if (line.rfind(tag, 0) == 0) return line.substr(tag.size());
  return "";
}

inline std::vector<Case> load(const std::filesystem::path& dir = VXP_TEST_DIR "/adversarial") {
  std::vector<Case> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".lmp") continue;
    std::ifstream is(e.path());
    std::stringstream ss;
    ss << is.rdbuf();
    Case c{e.path().stem().string(), "", "", ss.str()};
    c.kind = header(c.text, "kind");
    c.expect = header(c.text, "expect");
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Case& a, const Case& b) { return a.name < b.name; });
  return out;
}

inline vxp::sim::WorldState scene() {
  vxp::sim::WorldState s;
  s.ee_position = vxp::sim::kRestPosition;
  s.objects.push_back(vxp::sim::make_block("blue", 0.4, 0.6));
  s.objects.push_back(vxp::sim::make_block("green", 0.7, 0.3));
  return s;
}

inline Outcome run(const Case& c) {
  const vxp::sim::WorldState s = scene();
  const vxp::sim::WorldState before = s;
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    vxp::lmp::interpret(vxp::lmp::parse_program(c.text), s, vxp::lmp::lmp_kind_from(c.kind));
    o.observed = "contained";
  } catch (const vxp::Error& e) {
    o.observed = std::string(vxp::to_string(e.kind()));
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.state_unchanged = s == before;
  return o;
}

}  // namespace adversarial
