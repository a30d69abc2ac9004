#pragma once

#include <span>
#include <vector>

#include "hsplat/types.hpp"

namespace hsplat {

/// A rigid pose sample on a timeline. `rotation` must be a unit quaternion.
struct RigidPose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
  double timestamp = 0.0;

  RigidTransform transform() const { return RigidTransform::from(rotation, translation); }
};

/// Bracketing samples for a query time: result = lerp(lo, hi, weight).
struct TimeBracket {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double weight = 0.0;
};

/// Locates `t` in a strictly increasing timeline. Throws OutOfRange outside
/// [front, back]. A timestamp equal to a sample yields weight 0 on that sample.
TimeBracket bracket_time(std::span<const double> timestamps, double t);

/// slerp rotation, lerp translation. Exact at sample timestamps.
RigidTransform interpolate_pose(std::span<const RigidPose> poses, double t);

Quat slerp_shortest(const Quat& a, const Quat& b, double weight);

void check_unit_quaternion(const Quat& q, const char* what);

}  // namespace hsplat
