#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "vxp/common/error.hpp"
#include "vxp/lmp/fixtures.hpp"
#include "vxp/lmp/value.hpp"
#include "vxp/sim/world.hpp"

namespace vxp::lmp {

/// Produces program text for an LMP query.
class ProgramSource {
 public:
  virtual ~ProgramSource() = default;
  /// `sample` selects among alternative generations for the same query.
  virtual std::string generate(LmpKind kind, const std::string& query, int sample) = 0;
  /// Number of external endpoint requests made so far.
  virtual long endpoint_calls() const { return 0; }
};

class FixtureSource : public ProgramSource {
 public:
  explicit FixtureSource(FixtureStore store) : store_(std::move(store)) {}

  std::string generate(LmpKind kind, const std::string& query, int sample) override {
    auto m = store_.match(kind, query, sample);
    if (!m) fail(ErrorKind::generation, "no " + std::string(to_string(kind)) + " fixture for '" + query + "'");
    return m->text;
  }

  const FixtureStore& store() const { return store_; }

 private:
  FixtureStore store_;
};

/// Sorted object names; poses are deliberately left out so replans within a
/// sub-task keep hitting the cache.
inline std::string scene_signature(const sim::WorldState& s) {
  std::vector<std::string> names;
  for (const auto& o : s.objects) names.push_back(o.name);
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += n + ";";
  return out;
}

/// (kind, query, scene signature, sample) -> program text. Safe for
/// concurrent use; inserting an existing key keeps the last write.
class ProgramCache {
 public:
  using Key = std::tuple<LmpKind, std::string, std::string, int>;

  std::optional<std::string> find(const Key& k) const {
    std::lock_guard lock(mu_);
    auto it = map_.find(k);
    if (it == map_.end()) return std::nullopt;
    ++hits_;
    return it->second;
  }

  void insert(const Key& k, std::string text) {
    std::lock_guard lock(mu_);
    map_[k] = std::move(text);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return map_.size();
  }
  long hits() const {
    std::lock_guard lock(mu_);
    return hits_;
  }
  void clear() {
    std::lock_guard lock(mu_);
    map_.clear();
    hits_ = 0;
  }

 private:
  mutable std::mutex mu_;
  std::map<Key, std::string> map_;
  mutable long hits_ = 0;
};

}  // namespace vxp::lmp
