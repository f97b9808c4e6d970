#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vxp/voxel/value_map.hpp"

namespace vxp {

struct GaussianParams {
  double sigma = 2.0;      // voxels
  double truncate = 3.0;   // kernel radius in sigmas
};

/// Normalized 1-D Gaussian taps for offsets -r..r.
inline std::vector<double> gaussian_kernel(const GaussianParams& p = {}) {
  const int r = static_cast<int>(std::ceil(p.truncate * p.sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (p.sigma * p.sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable zero-padded convolution of a single-channel field in place.
inline void gaussian_filter(std::vector<double>& field, const std::array<int, 3>& dims, const GaussianParams& p = {}) {
  const std::vector<double> k = gaussian_kernel(p);
  const int r = static_cast<int>(k.size() / 2);
  const int n[3] = {dims[0], dims[1], dims[2]};
  const std::size_t stride[3] = {static_cast<std::size_t>(n[1]) * n[2], static_cast<std::size_t>(n[2]), 1};
  std::vector<double> line, out;
  for (int axis = 0; axis < 3; ++axis) {
    const int len = n[axis];
    line.assign(len, 0.0);
    out.assign(len, 0.0);
    const int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
    for (int a = 0; a < n[o1]; ++a)
      for (int b = 0; b < n[o2]; ++b) {
        const std::size_t base = a * stride[o1] + b * stride[o2];
        bool nonzero = false;
        for (int q = 0; q < len; ++q) {
          line[q] = field[base + q * stride[axis]];
          nonzero = nonzero || line[q] != 0.0;
        }
        if (!nonzero) continue;
        for (int q = 0; q < len; ++q) {
          double acc = 0.0;
          const int lo = std::max(-r, -q), hi = std::min(r, len - 1 - q);
          for (int t = lo; t <= hi; ++t) acc += k[t + r] * line[q + t];
          out[q] = acc;
        }
        for (int q = 0; q < len; ++q) field[base + q * stride[axis]] = out[q];
      }
  }
}

/// Gaussian-smoothed avoidance map, rescaled so the output peak equals the
/// input peak.
inline ValueMap smooth_avoidance(const ValueMap& map, const GaussianParams& p = {}) {
  if (map.kind() != MapKind::avoidance) fail(ErrorKind::invalid_input, "smooth_avoidance expects an avoidance map");
  ValueMap out(MapKind::avoidance, map.spec());
  const auto src = map.data();
  const double in_max = src.empty() ? 0.0 : *std::max_element(src.begin(), src.end());
  if (in_max <= 0.0) return out;
  std::vector<double> f(src.begin(), src.end());
  gaussian_filter(f, map.spec().dims(), p);
  const double out_max = *std::max_element(f.begin(), f.end());
  const double scale = out_max > 0.0 ? in_max / out_max : 0.0;
  auto dst = out.data();
  for (std::size_t i = 0; i < f.size(); ++i) dst[i] = f[i] * scale;
  return out;
}

}  // namespace vxp
