#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "vxp/common/error.hpp"
#include "vxp/common/geometry.hpp"

namespace vxp::dynamics {

inline constexpr double kMaxPushDistance = 0.2;

/// Planar push: where the pusher touches, which way, and how far.
struct PushAction {
  Vec3 contact{};
  /// Unit and horizontal.
  Vec3 direction{1, 0, 0};
  double distance = 0.0;

  bool operator==(const PushAction&) const = default;
};

inline void check_push(const PushAction& a) {
  if (!is_finite(a.contact) || !is_finite(a.direction) || !std::isfinite(a.distance))
    fail(ErrorKind::invalid_input, "push action has non-finite fields");
  if (std::abs(a.direction.z) > 1e-9 || std::abs(norm(a.direction) - 1.0) > 1e-9)
    fail(ErrorKind::invalid_input, "push direction must be a horizontal unit vector");
  if (a.distance < 0.0 || a.distance > kMaxPushDistance + 1e-12)
    fail(ErrorKind::invalid_input, "push distance must lie in [0, 0.2] m");
}

/// Point-cloud motion model used by the push optimizer.
using PushModel = std::function<std::vector<Vec3>(const std::vector<Vec3>&, const PushAction&)>;

/// Heuristic model: the whole cloud translates rigidly along the push.
inline std::vector<Vec3> push_predict(const std::vector<Vec3>& cloud, const PushAction& a) {
  if (std::abs(norm(a.direction) - 1.0) > 1e-9) fail(ErrorKind::invalid_input, "push_predict: direction must be unit-norm");
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  const Vec3 shift = a.direction * a.distance;
  for (const auto& p : cloud) out.push_back(p + shift);
  return out;
}

/// Observation-space model that assumes nothing moves.
inline std::vector<double> identity_predict(const std::vector<double>& o, const std::vector<double>& a,
                                            std::size_t action_dim) {
  if (a.size() != action_dim) fail(ErrorKind::invalid_input, "identity_predict: action dimension mismatch");
  return o;
}

}  // namespace vxp::dynamics
