#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "vxp/common/error.hpp"
#include "vxp/lmp/value.hpp"

namespace vxp::lmp {

#ifdef VXP_DATA_DIR
inline const char* kDefaultDataDir = VXP_DATA_DIR;
#else
inline const char* kDefaultDataDir = "data";
#endif

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A canned program for one LMP kind. Patterns use [slot] placeholders;
/// the captured text replaces the same placeholder in the body.
struct Fixture {
  std::string name;
  std::vector<std::string> patterns;
  /// Alternative bodies selected by sample index.
  std::vector<std::string> variants;
};

struct FixtureMatch {
  const Fixture* fixture = nullptr;
  std::map<std::string, std::string> captures;
  std::string text;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

struct CompiledPattern {
  std::regex re;
  std::vector<std::string> slots;
  std::size_t literal_chars = 0;
};

inline CompiledPattern compile_pattern(const std::string& p) {
  CompiledPattern out;
  std::string re;
  for (std::size_t i = 0; i < p.size();) {
    if (p[i] == '[') {
      const auto end = p.find(']', i);
      if (end == std::string::npos) fail(ErrorKind::invalid_input, "unterminated slot in pattern '" + p + "'");
      out.slots.push_back(p.substr(i + 1, end - i - 1));
      re += "(.+?)";
      i = end + 1;
      continue;
    }
    static const std::string special = "\\^$.|?*+()[]{}";
    if (special.find(p[i]) != std::string::npos) re += '\\';
    re += p[i];
    ++out.literal_chars;
    ++i;
  }
  out.re = std::regex(re, std::regex::ECMAScript | std::regex::icase);
  return out;
}

inline std::string substitute(std::string body, const std::map<std::string, std::string>& captures) {
  for (const auto& [slot, value] : captures) {
    const std::string key = "[" + slot + "]";
    for (std::size_t pos = body.find(key); pos != std::string::npos; pos = body.find(key, pos + value.size()))
      body.replace(pos, key.size(), value);
  }
  return body;
}

/// Strips the header comment lines that declare patterns.
inline std::pair<std::vector<std::string>, std::string> split_header(const std::string& text) {
  std::vector<std::string> patterns;
  std::istringstream in(text);
  std::string line, body;
  bool header = true;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (header && t.rfind("# pattern:", 0) == 0) {
      patterns.push_back(trim(t.substr(10)));
      continue;
    }
    header = false;
    body += line + "\n";
  }
  return {patterns, body};
}

}  // namespace detail

/// Offline program corpus: data/fixtures/<kind>/<name>[.<k>].lmp.
class FixtureStore {
 public:
  FixtureStore() = default;

  static FixtureStore load(const std::filesystem::path& dir) {
    FixtureStore s;
    if (!std::filesystem::is_directory(dir)) fail(ErrorKind::io, "fixture directory not found: " + dir.string());
    for (LmpKind k : kAllKinds) {
      const auto sub = dir / std::string(to_string(k));
      if (!std::filesystem::is_directory(sub)) continue;
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(sub))
        if (e.path().extension() == ".lmp") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      std::map<std::string, Fixture> by_name;
      for (const auto& f : files) {
        std::string stem = f.stem().string();
        // name.<k>.lmp is variant k of `name`.
        const auto dot = stem.rfind('.');
        if (dot != std::string::npos) stem = stem.substr(0, dot);
        auto [patterns, body] = detail::split_header(read_file(f));
        Fixture& fx = by_name[stem];
        fx.name = stem;
        if (fx.patterns.empty()) fx.patterns = patterns;
        else if (!patterns.empty() && patterns != fx.patterns)
          fail(ErrorKind::invalid_input, "variants of fixture '" + stem + "' declare different patterns");
        fx.variants.push_back(body);
      }
      for (auto& [name, fx] : by_name) {
        if (fx.patterns.empty()) fail(ErrorKind::invalid_input, "fixture '" + name + "' has no '# pattern:' header");
        s.add(k, std::move(fx));
      }
    }
    return s;
  }

  static FixtureStore load_default() { return load(std::filesystem::path(kDefaultDataDir) / "fixtures"); }

  void add(LmpKind k, Fixture f) {
    auto& list = by_kind_[k];
    for (const auto& p : f.patterns) compiled_[k].push_back({list.size(), detail::compile_pattern(p)});
    list.push_back(std::move(f));
  }

  const std::vector<Fixture>& fixtures(LmpKind k) const {
    static const std::vector<Fixture> none;
    auto it = by_kind_.find(k);
    return it == by_kind_.end() ? none : it->second;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [k, v] : by_kind_) n += v.size();
    return n;
  }

  /// Most specific matching pattern wins: more literal characters, then
  /// fewer slots, then load order.
  std::optional<FixtureMatch> match(LmpKind kind, const std::string& query_in, int sample = 0) const {
    const std::string query = detail::trim(query_in);
    auto it = compiled_.find(kind);
    if (it == compiled_.end()) return std::nullopt;
    const std::pair<std::size_t, detail::CompiledPattern>* best = nullptr;
    std::smatch best_m;
    for (const auto& entry : it->second) {
      std::smatch m;
      if (!std::regex_match(query, m, entry.second.re)) continue;
      if (best) {
        const auto& b = best->second;
        const auto& c = entry.second;
        if (c.literal_chars < b.literal_chars) continue;
        if (c.literal_chars == b.literal_chars && c.slots.size() >= b.slots.size()) continue;
      }
      best = &entry;
      best_m = m;
    }
    if (!best) return std::nullopt;
    FixtureMatch out;
    out.fixture = &by_kind_.at(kind)[best->first];
    for (std::size_t i = 0; i < best->second.slots.size(); ++i)
      out.captures[best->second.slots[i]] = best_m[static_cast<int>(i) + 1].str();
    const auto& variants = out.fixture->variants;
    const std::size_t pick = static_cast<std::size_t>(std::max(0, sample)) % variants.size();
    out.text = detail::substitute(variants[pick], out.captures);
    return out;
  }

 private:
  std::map<LmpKind, std::vector<Fixture>> by_kind_;
  std::map<LmpKind, std::vector<std::pair<std::size_t, detail::CompiledPattern>>> compiled_;
};

/// Few-shot prompt for one LMP kind.
struct PromptBundle {
  LmpKind kind = LmpKind::planner;
  std::string preamble;
  std::vector<std::pair<std::string, std::string>> examples;
};

/// Format: preamble text, then blocks introduced by "=== query: <text>".
inline PromptBundle parse_prompt_bundle(LmpKind kind, const std::string& text) {
  PromptBundle b;
  b.kind = kind;
  std::istringstream in(text);
  std::string line;
  std::string* target = &b.preamble;
  while (std::getline(in, line)) {
    if (line.rfind("=== query:", 0) == 0) {
      b.examples.emplace_back(detail::trim(line.substr(10)), std::string{});
      target = &b.examples.back().second;
      continue;
    }
    *target += line + "\n";
  }
  b.preamble = detail::trim(b.preamble);
  for (auto& [q, p] : b.examples) p = detail::trim(p) + "\n";
  if (b.preamble.empty()) fail(ErrorKind::invalid_input, "prompt bundle for " + std::string(to_string(kind)) + " has no preamble");
  return b;
}

inline std::map<LmpKind, PromptBundle> load_prompts(const std::filesystem::path& dir) {
  std::map<LmpKind, PromptBundle> out;
  for (LmpKind k : kAllKinds) {
    const auto f = dir / (std::string(to_string(k)) + ".txt");
    out[k] = parse_prompt_bundle(k, read_file(f));
  }
  return out;
}

inline std::map<LmpKind, PromptBundle> load_default_prompts() {
  return load_prompts(std::filesystem::path(kDefaultDataDir) / "prompts");
}

}  // namespace vxp::lmp
