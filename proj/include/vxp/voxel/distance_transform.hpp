#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vxp/voxel/value_map.hpp"

namespace vxp {

namespace detail {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher). `f` holds
// squared distances (or +inf), `d` receives the 1-D transform. The scratch
// buffers are sized by the caller.
inline void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        if (--k < 0) break;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf : s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d, d + n, inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

}  // namespace detail

/// Exact squared Euclidean distance (in voxel units) from every voxel to the
/// nearest voxel with `mask[i] != 0`. All +inf when the mask is empty.
inline std::vector<double> squared_edt(const std::vector<unsigned char>& mask, const std::array<int, 3>& dims) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<double> g(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) g[i] = mask[i] ? 0.0 : inf;

  const int nmax = std::max({nx, ny, nz});
  std::vector<double> f(nmax), d(nmax), z(nmax + 1);
  std::vector<int> v(nmax);
  auto at = [&](int x, int y, int zz) -> double& {
    return g[(static_cast<std::size_t>(x) * ny + y) * nz + zz];
  };

  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      for (int q = 0; q < nz; ++q) f[q] = at(x, y, q);
      detail::edt_1d(f.data(), d.data(), nz, v, z);
      for (int q = 0; q < nz; ++q) at(x, y, q) = d[q];
    }
  for (int x = 0; x < nx; ++x)
    for (int zz = 0; zz < nz; ++zz) {
      for (int q = 0; q < ny; ++q) f[q] = at(x, q, zz);
      detail::edt_1d(f.data(), d.data(), ny, v, z);
      for (int q = 0; q < ny; ++q) at(x, q, zz) = d[q];
    }
  for (int y = 0; y < ny; ++y)
    for (int zz = 0; zz < nz; ++zz) {
      for (int q = 0; q < nx; ++q) f[q] = at(q, y, zz);
      detail::edt_1d(f.data(), d.data(), nx, v, z);
      for (int q = 0; q < nx; ++q) at(q, y, zz) = d[q];
    }
  return g;
}

/// Turns a sparse affordance map into a dense attraction field:
/// 1 - d/d_max, where d is the distance to the nearest positive voxel.
/// Voxels of the positive set get exactly 1. An all-zero input yields an
/// all-zero output with `empty_target` set.
inline ValueMap densify_affordance(const ValueMap& map) {
  if (map.kind() != MapKind::affordance) fail(ErrorKind::invalid_input, "densify_affordance expects an affordance map");
  const GridSpec& spec = map.spec();
  ValueMap out(MapKind::affordance, spec);
  std::vector<unsigned char> mask(spec.voxel_count());
  bool any = false;
  const auto src = map.data();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = src[i] > 0.0;
    any = any || mask[i];
  }
  if (!any) {
    out.empty_target = true;
    return out;
  }
  std::vector<double> d2 = squared_edt(mask, spec.dims());
  double max_d = 0.0;
  for (double& v : d2) {
    v = std::sqrt(v);
    max_d = std::max(max_d, v);
  }
  auto dst = out.data();
  if (max_d == 0.0) {
    std::fill(dst.begin(), dst.end(), 1.0);
    return out;
  }
  for (std::size_t i = 0; i < d2.size(); ++i) dst[i] = mask[i] ? 1.0 : 1.0 - d2[i] / max_d;
  return out;
}

}  // namespace vxp
