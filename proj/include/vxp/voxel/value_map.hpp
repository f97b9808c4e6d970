#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vxp/common/error.hpp"
#include "vxp/common/geometry.hpp"
#include "vxp/voxel/grid.hpp"

namespace vxp {

enum class MapKind : std::int32_t { affordance = 0, avoidance = 1, rotation = 2, velocity = 3, gripper = 4 };

inline std::string_view to_string(MapKind k) {
  switch (k) {
    case MapKind::affordance: return "affordance";
    case MapKind::avoidance: return "avoidance";
    case MapKind::rotation: return "rotation";
    case MapKind::velocity: return "velocity";
    case MapKind::gripper: return "gripper";
  }
  return "unknown";
}

constexpr int channels_of(MapKind k) { return k == MapKind::rotation ? 4 : 1; }

/// Per-kind payload written into a map by `set_voxel_by_radius` and the
/// empty-map constructors. Rotation maps take a quaternion, the others a
/// scalar.
struct MapValue {
  double scalar = 0.0;
  std::optional<Quat> rotation;

  static MapValue of(double v) { return {v, std::nullopt}; }
  static MapValue of(const Quat& q) { return {0.0, q}; }
};

/// Dense (w,h,d,k) voxel field of one kind.
class ValueMap {
 public:
  ValueMap(MapKind kind, GridSpec spec)
      : kind_(kind), spec_(std::move(spec)), k_(channels_of(kind)), data_(spec_.voxel_count() * k_, 0.0) {}

  MapKind kind() const { return kind_; }
  const GridSpec& spec() const { return spec_; }
  int channels() const { return k_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double at(const VoxelIndex& v) const { return data_[spec_.linear(v) * k_]; }
  double& at(const VoxelIndex& v) { return data_[spec_.linear(v) * k_]; }
  double at_linear(std::size_t i) const { return data_[i * k_]; }

  Quat rotation_at(const VoxelIndex& v) const {
    const double* q = &data_[spec_.linear(v) * k_];
    return {q[0], q[1], q[2], q[3]};
  }

  /// Writes `value` into voxel `v` after checking the kind invariant.
  void set(const VoxelIndex& v, const MapValue& value) {
    const std::size_t base = spec_.linear(v) * k_;
    if (kind_ == MapKind::rotation) {
      const Quat q = *value.rotation;
      data_[base + 0] = q.w;
      data_[base + 1] = q.x;
      data_[base + 2] = q.y;
      data_[base + 3] = q.z;
    } else {
      data_[base] = value.scalar;
    }
  }

  void fill(const MapValue& value) {
    for (std::size_t i = 0; i < spec_.voxel_count(); ++i) set(spec_.unlinear(i), value);
  }

  /// Set when densification found no positive voxel to attract toward.
  bool empty_target = false;

  bool operator==(const ValueMap& o) const {
    return kind_ == o.kind_ && spec_ == o.spec_ && data_ == o.data_;
  }

 private:
  MapKind kind_;
  GridSpec spec_;
  int k_;
  std::vector<double> data_;
};

/// Rejects values that break the kind invariant; rotation values are
/// normalized on the way in.
inline MapValue check_value(MapKind kind, MapValue value) {
  switch (kind) {
    case MapKind::affordance:
    case MapKind::avoidance:
      if (!std::isfinite(value.scalar) || value.scalar < 0.0)
        fail(ErrorKind::invalid_input, std::string(to_string(kind)) + " values must be finite and >= 0");
      break;
    case MapKind::velocity:
      if (!std::isfinite(value.scalar) || value.scalar <= 0.0)
        fail(ErrorKind::invalid_input, "velocity values must be finite and > 0");
      break;
    case MapKind::gripper:
      if (value.scalar != 0.0 && value.scalar != 1.0)
        fail(ErrorKind::invalid_input, "gripper values must be 0 (open) or 1 (closed)");
      break;
    case MapKind::rotation: {
      if (!value.rotation) fail(ErrorKind::invalid_input, "rotation map needs a quaternion value");
      const double n = value.rotation->norm();
      if (!std::isfinite(n) || n == 0.0) fail(ErrorKind::invalid_input, "rotation value must be a nonzero quaternion");
      value.rotation = value.rotation->normalized();
      break;
    }
  }
  return value;
}

/// Current end-effector state needed to seed rotation and gripper maps.
struct PoseDefaults {
  Quat rotation;
  int gripper = 0;
};

inline ValueMap empty_map(MapKind kind, const GridSpec& spec, std::optional<PoseDefaults> current = std::nullopt) {
  ValueMap m(kind, spec);
  switch (kind) {
    case MapKind::affordance:
    case MapKind::avoidance:
      break;
    case MapKind::velocity:
      std::fill(m.data().begin(), m.data().end(), 1.0);
      break;
    case MapKind::rotation: {
      if (!current) fail(ErrorKind::invalid_input, "rotation map requires the current end-effector pose");
      const Quat q = current->rotation.normalized();
      auto d = m.data();
      for (std::size_t i = 0; i < d.size(); i += 4) {
        d[i] = q.w;
        d[i + 1] = q.x;
        d[i + 2] = q.y;
        d[i + 3] = q.z;
      }
      break;
    }
    case MapKind::gripper:
      if (!current) fail(ErrorKind::invalid_input, "gripper map requires the current gripper action");
      std::fill(m.data().begin(), m.data().end(), static_cast<double>(current->gripper));
      break;
  }
  return m;
}

/// Writes `value` into every voxel whose center lies within radius_cm of the
/// center voxel's center. Returns the number of voxels written.
inline std::size_t set_voxel_by_radius(ValueMap& map, const VoxelIndex& center, double radius_cm, MapValue value) {
  const GridSpec& spec = map.spec();
  if (!spec.contains(center)) fail(ErrorKind::invalid_input, "set_voxel_by_radius: center out of bounds");
  if (!std::isfinite(radius_cm) || radius_cm < 0.0)
    fail(ErrorKind::invalid_input, "set_voxel_by_radius: radius must be finite and >= 0");
  value = check_value(map.kind(), value);
  const double r = radius_cm / 100.0;
  const Vec3& vs = spec.voxel_size();
  std::array<int, 3> lo{}, hi{};
  // Offsets are clipped to the grid first, so a huge radius costs at most
  // one pass over the map.
  for (int a = 0; a < 3; ++a) {
    const double reach = std::min(std::floor(r / vs[a] + 1e-9), static_cast<double>(spec.dim(a)));
    lo[a] = std::max(-static_cast<int>(reach), -center[a]);
    hi[a] = std::min(static_cast<int>(reach), spec.dim(a) - 1 - center[a]);
  }
  std::size_t written = 0;
  for (int dx = lo[0]; dx <= hi[0]; ++dx)
    for (int dy = lo[1]; dy <= hi[1]; ++dy)
      for (int dz = lo[2]; dz <= hi[2]; ++dz) {
        const VoxelIndex v{center.x + dx, center.y + dy, center.z + dz};
        const double ex = dx * vs.x, ey = dy * vs.y, ez = dz * vs.z;
        // Center-to-center distance with a tolerance for rounding in the
        // voxel-size product.
        if (ex * ex + ey * ey + ez * ez > r * r * (1.0 + 1e-12) + 1e-18) continue;
        map.set(v, value);
        ++written;
      }
  return written;
}

/// Writes `value` into the inclusive box [lo, hi] (clipped to the grid).
inline std::size_t set_voxel_by_box(ValueMap& map, VoxelIndex lo, VoxelIndex hi, MapValue value) {
  const GridSpec& spec = map.spec();
  value = check_value(map.kind(), value);
  for (int a = 0; a < 3; ++a) {
    if (lo[a] > hi[a]) std::swap(lo[a], hi[a]);
    lo[a] = std::max(lo[a], 0);
    hi[a] = std::min(hi[a], spec.dim(a) - 1);
    if (lo[a] > hi[a]) return 0;
  }
  std::size_t written = 0;
  for (int x = lo.x; x <= hi.x; ++x)
    for (int y = lo.y; y <= hi.y; ++y)
      for (int z = lo.z; z <= hi.z; ++z) {
        map.set({x, y, z}, value);
        ++written;
      }
  return written;
}

// ---------------------------------------------------------------------------
// Dumps

namespace detail {
inline constexpr char kMapMagic[8] = {'V', 'X', 'P', 'M', 'A', 'P', '1', '\0'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorKind::io, "truncated value-map dump");
  return v;
}
}  // namespace detail

/// Flat binary dump: magic, int32 dims[3], int32 kind, int32 k, then the
/// row-major float64 payload. Bounds are not stored; readers supply the
/// GridSpec (the workspace is fixed).
inline void write_binary(std::ostream& os, const ValueMap& map) {
  os.write(detail::kMapMagic, sizeof detail::kMapMagic);
  for (int a = 0; a < 3; ++a) detail::put<std::int32_t>(os, map.spec().dim(a));
  detail::put<std::int32_t>(os, static_cast<std::int32_t>(map.kind()));
  detail::put<std::int32_t>(os, map.channels());
  os.write(reinterpret_cast<const char*>(map.data().data()),
           static_cast<std::streamsize>(map.data().size() * sizeof(double)));
  if (!os) fail(ErrorKind::io, "failed writing value-map dump");
}

inline ValueMap read_binary(std::istream& is, const Vec3& world_min = {0, 0, 0}, const Vec3& world_max = {1, 1, 1}) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, detail::kMapMagic, sizeof magic) != 0) fail(ErrorKind::io, "bad value-map magic");
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) dims[a] = detail::get<std::int32_t>(is);
  const auto kind = static_cast<MapKind>(detail::get<std::int32_t>(is));
  const int k = detail::get<std::int32_t>(is);
  if (k != channels_of(kind)) fail(ErrorKind::io, "channel count does not match map kind");
  ValueMap m(kind, GridSpec(dims, world_min, world_max));
  is.read(reinterpret_cast<char*>(m.data().data()), static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  if (!is) fail(ErrorKind::io, "truncated value-map payload");
  return m;
}

/// Human-readable z-slice: one row per y (back at top), one column per x,
/// channel 0 only.
inline void write_slice(std::ostream& os, const ValueMap& map, int z, int precision = 2) {
  const GridSpec& s = map.spec();
  z = std::clamp(z, 0, s.dim(2) - 1);
  os << "# " << to_string(map.kind()) << " slice z=" << z << " (" << s.dim(0) << "x" << s.dim(1) << ")\n";
  os << std::fixed << std::setprecision(precision);
  for (int y = s.dim(1) - 1; y >= 0; --y) {
    for (int x = 0; x < s.dim(0); ++x) {
      if (x) os << ' ';
      os << map.at({x, y, z});
    }
    os << '\n';
  }
}

}  // namespace vxp
