#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "vxp/common/error.hpp"
#include "vxp/common/geometry.hpp"

namespace vxp {

/// Integer voxel coordinate. Construction does not clamp; use
/// `GridSpec::contains` or `world_to_voxel` to obtain in-bounds indices.
struct VoxelIndex {
  int x = 0, y = 0, z = 0;

  constexpr int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr VoxelIndex operator+(const VoxelIndex& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr VoxelIndex operator-(const VoxelIndex& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr bool operator==(const VoxelIndex&) const = default;
  constexpr auto operator<=>(const VoxelIndex&) const = default;
};

using WorldPoint = Vec3;

/// Axis-aligned workspace discretized into a dense voxel lattice.
class GridSpec {
 public:
  /// The default workspace: a 1 m cube at 100^3 resolution (1 cm voxels).
  GridSpec() : GridSpec({100, 100, 100}, {0, 0, 0}, {1, 1, 1}) {}

  GridSpec(std::array<int, 3> dims, Vec3 world_min, Vec3 world_max)
      : dims_(dims), min_(world_min), max_(world_max) {
    for (int a = 0; a < 3; ++a) {
      if (dims_[a] <= 0) fail(ErrorKind::invalid_input, "grid dims must be positive");
      if (!(max_[a] > min_[a])) fail(ErrorKind::invalid_input, "world_max must exceed world_min on every axis");
      size_[a] = (max_[a] - min_[a]) / dims_[a];
    }
  }

  const std::array<int, 3>& dims() const { return dims_; }
  int dim(int axis) const { return dims_[axis]; }
  const Vec3& world_min() const { return min_; }
  const Vec3& world_max() const { return max_; }
  const Vec3& voxel_size() const { return size_; }
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }

  bool contains(const VoxelIndex& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims_[0] && v.y < dims_[1] && v.z < dims_[2];
  }
  bool contains(const WorldPoint& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < min_[a] || p[a] > max_[a]) return false;
    return true;
  }

  /// Row-major (x slowest, z fastest) linear offset.
  std::size_t linear(const VoxelIndex& v) const {
    return (static_cast<std::size_t>(v.x) * dims_[1] + v.y) * dims_[2] + v.z;
  }
  VoxelIndex unlinear(std::size_t i) const {
    const int z = static_cast<int>(i % dims_[2]);
    i /= dims_[2];
    const int y = static_cast<int>(i % dims_[1]);
    return {static_cast<int>(i / dims_[1]), y, z};
  }

  VoxelIndex clamp(VoxelIndex v) const {
    for (int a = 0; a < 3; ++a) v[a] = std::clamp(v[a], 0, dims_[a] - 1);
    return v;
  }
  WorldPoint clamp(WorldPoint p) const {
    for (int a = 0; a < 3; ++a) p[a] = std::clamp(p[a], min_[a], max_[a]);
    return p;
  }

  bool operator==(const GridSpec& o) const { return dims_ == o.dims_ && min_ == o.min_ && max_ == o.max_; }

 private:
  std::array<int, 3> dims_;
  Vec3 min_, max_, size_;
};

/// Points outside the workspace clamp to the boundary voxel.
inline VoxelIndex world_to_voxel(const WorldPoint& p, const GridSpec& spec) {
  if (!is_finite(p)) fail(ErrorKind::invalid_input, "world_to_voxel: non-finite coordinate");
  VoxelIndex v;
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - spec.world_min()[a]) / spec.voxel_size()[a]);
    v[a] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(spec.dim(a) - 1)));
  }
  return v;
}

inline WorldPoint voxel_to_world(const VoxelIndex& v, const GridSpec& spec) {
  if (!spec.contains(v)) fail(ErrorKind::invalid_input, "voxel_to_world: index out of bounds");
  WorldPoint p;
  for (int a = 0; a < 3; ++a) p[a] = spec.world_min()[a] + (v[a] + 0.5) * spec.voxel_size()[a];
  return p;
}

/// Continuous voxel-space coordinate (no clamping, no flooring). This is the
/// frame programs see: floor() of it is the containing voxel.
inline Vec3 world_to_voxel_space(const WorldPoint& p, const GridSpec& spec) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) out[a] = (p[a] - spec.world_min()[a]) / spec.voxel_size()[a];
  return out;
}

inline WorldPoint voxel_space_to_world(const Vec3& v, const GridSpec& spec) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) out[a] = spec.world_min()[a] + v[a] * spec.voxel_size()[a];
  return out;
}

/// Displacement in voxel coordinates for an offset of `cm` centimeters along
/// `direction`.
inline VoxelIndex cm2index(double cm, const Vec3& direction, const GridSpec& spec) {
  if (!std::isfinite(cm) || cm < 0.0) fail(ErrorKind::invalid_input, "cm2index: cm must be finite and >= 0");
  if (!is_finite(direction) || norm(direction) == 0.0) fail(ErrorKind::invalid_input, "cm2index: zero direction");
  const Vec3 d = normalized(direction);
  VoxelIndex out;
  for (int a = 0; a < 3; ++a) out[a] = static_cast<int>(std::lround(cm / 100.0 * d[a] / spec.voxel_size()[a]));
  return out;
}

/// Centimeters of world displacement for moving `index` voxels along the
/// normalized direction.
inline double index2cm(double index, const Vec3& direction, const GridSpec& spec) {
  if (!is_finite(direction) || norm(direction) == 0.0) fail(ErrorKind::invalid_input, "index2cm: zero direction");
  const Vec3 d = normalized(direction);
  Vec3 step;
  for (int a = 0; a < 3; ++a) step[a] = d[a] * spec.voxel_size()[a];
  return index * norm(step) * 100.0;
}

}  // namespace vxp
