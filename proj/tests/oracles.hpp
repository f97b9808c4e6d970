#pragma once
// Brute-force reference implementations used only by tests. Each one takes
// the slow, obvious route so it stays independent of the optimized code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vxp/voxel/grid.hpp"
#include "vxp/voxel/value_map.hpp"

namespace oracle {

using vxp::GridSpec;
using vxp::VoxelIndex;

/// Distance from every voxel to the nearest target via all-pairs search.
inline std::vector<double> nearest_target_distance(const std::vector<VoxelIndex>& targets, const std::array<int, 3>& d) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(d[0]) * d[1] * d[2]);
  for (int x = 0; x < d[0]; ++x)
    for (int y = 0; y < d[1]; ++y)
      for (int z = 0; z < d[2]; ++z) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : targets) {
          const double dx = x - t.x, dy = y - t.y, dz = z - t.z;
          best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
        }
        out.push_back(best);
      }
  return out;
}

/// Expected densified affordance: 1 - d/max(d).
inline std::vector<double> densified(const std::vector<VoxelIndex>& targets, const std::array<int, 3>& d) {
  auto dist = nearest_target_distance(targets, d);
  const double mx = *std::max_element(dist.begin(), dist.end());
  for (double& v : dist) v = mx > 0 ? 1.0 - v / mx : 1.0;
  return dist;
}

/// Naive 3-D convolution with the product Gaussian (zero padding), followed
/// by the peak-preserving rescale.
inline std::vector<double> smoothed(const std::vector<double>& in, const std::array<int, 3>& d, double sigma,
                                    double truncate) {
  const int r = static_cast<int>(std::ceil(truncate * sigma));
  std::vector<double> k1(2 * r + 1);
  double s = 0;
  for (int i = -r; i <= r; ++i) s += (k1[i + r] = std::exp(-0.5 * i * i / (sigma * sigma)));
  for (double& v : k1) v /= s;
  auto idx = [&](int x, int y, int z) { return (static_cast<std::size_t>(x) * d[1] + y) * d[2] + z; };
  std::vector<double> out(in.size(), 0.0);
  for (int x = 0; x < d[0]; ++x)
    for (int y = 0; y < d[1]; ++y)
      for (int z = 0; z < d[2]; ++z) {
        double acc = 0;
        for (int i = -r; i <= r; ++i)
          for (int j = -r; j <= r; ++j)
            for (int k = -r; k <= r; ++k) {
              const int xx = x + i, yy = y + j, zz = z + k;
              if (xx < 0 || yy < 0 || zz < 0 || xx >= d[0] || yy >= d[1] || zz >= d[2]) continue;
              acc += k1[i + r] * k1[j + r] * k1[k + r] * in[idx(xx, yy, zz)];
            }
        out[idx(x, y, z)] = acc;
      }
  const double in_max = *std::max_element(in.begin(), in.end());
  const double out_max = *std::max_element(out.begin(), out.end());
  if (out_max > 0)
    for (double& v : out) v *= in_max / out_max;
  return out;
}

/// Lowest summed cost over every path of exactly `len` voxels from `start`
/// where each step moves to a 26-neighbour or stays put, restricted to
/// voxels with `free[i]` set. Exhaustive dynamic programming over the grid.
inline double min_path_cost(const std::vector<double>& cost, const std::vector<unsigned char>& free,
                            const GridSpec& spec, const VoxelIndex& start, std::size_t len) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = spec.voxel_count();
  std::vector<double> best(n, inf);
  best[spec.linear(start)] = cost[spec.linear(start)];
  for (std::size_t step = 1; step < len; ++step) {
    std::vector<double> next(n, inf);
    for (std::size_t i = 0; i < n; ++i) {
      if (!free[i]) continue;
      const VoxelIndex v = spec.unlinear(i);
      double b = inf;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            const VoxelIndex u{v.x + dx, v.y + dy, v.z + dz};
            if (spec.contains(u)) b = std::min(b, best[spec.linear(u)]);
          }
      if (b < inf) next[i] = b + cost[i];
    }
    best.swap(next);
  }
  return *std::min_element(best.begin(), best.end());
}

}  // namespace oracle
