#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "vxp/voxel/value_map.hpp"

namespace vxp {

/// Planner cost field; lower is more desirable.
struct CostMap {
  GridSpec spec;
  std::vector<double> data;
  std::vector<std::string> provenance;

  double at(const VoxelIndex& v) const { return data[spec.linear(v)]; }
};

struct CostWeights {
  double affordance = 2.0;
  double avoidance = 1.0;
};

/// Min-max normalization to [0,1]; a constant field maps to all zeros.
inline std::vector<double> minmax_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / range;
  return out;
}

/// cost = -(w_aff * aff_norm - w_avoid * avoid_norm). Either map may be
/// absent, in which case its term is zero.
inline CostMap compose_cost(const ValueMap* affordance, const ValueMap* avoidance, const CostWeights& w = {}) {
  if (!affordance && !avoidance) fail(ErrorKind::invalid_input, "compose_cost needs at least one map");
  const GridSpec& spec = affordance ? affordance->spec() : avoidance->spec();
  if (affordance && avoidance && !(affordance->spec() == avoidance->spec()))
    fail(ErrorKind::invalid_input, "compose_cost: maps live on different grids");
  if (affordance && affordance->kind() != MapKind::affordance)
    fail(ErrorKind::invalid_input, "compose_cost: first map must be an affordance map");
  if (avoidance && avoidance->kind() != MapKind::avoidance)
    fail(ErrorKind::invalid_input, "compose_cost: second map must be an avoidance map");

  CostMap cost{spec, std::vector<double>(spec.voxel_count(), 0.0), {}};
  if (affordance) {
    const auto a = minmax_normalize(affordance->data());
    for (std::size_t i = 0; i < a.size(); ++i) cost.data[i] -= w.affordance * a[i];
    cost.provenance.emplace_back("affordance");
  }
  if (avoidance) {
    const auto v = minmax_normalize(avoidance->data());
    for (std::size_t i = 0; i < v.size(); ++i) cost.data[i] += w.avoidance * v[i];
    cost.provenance.emplace_back("avoidance");
  }
  return cost;
}

inline CostMap compose_cost(const ValueMap& affordance, const ValueMap& avoidance, const CostWeights& w = {}) {
  return compose_cost(&affordance, &avoidance, w);
}

/// F_task = -sum_j V(p_j).
inline double accumulate_task_cost(std::span<const VoxelIndex> path, const ValueMap& map) {
  double sum = 0.0;
  for (const VoxelIndex& v : path) {
    if (!map.spec().contains(v)) fail(ErrorKind::invalid_input, "accumulate_task_cost: index out of bounds");
    sum += map.at(v);
  }
  return -sum;
}

}  // namespace vxp
