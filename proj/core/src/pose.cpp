#include "hsplat/pose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsplat/error.hpp"

namespace hsplat {

TimeBracket bracket_time(std::span<const double> timestamps, double t) {
  require(!timestamps.empty(), ErrorCode::OutOfRange, "empty timeline");
  if (!(t >= timestamps.front() && t <= timestamps.back())) {
    fail(ErrorCode::OutOfRange, "time " + std::to_string(t) + " outside [" +
                                    std::to_string(timestamps.front()) + ", " +
                                    std::to_string(timestamps.back()) + "]");
  }
  auto it = std::upper_bound(timestamps.begin(), timestamps.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - timestamps.begin());
  if (hi == 0) hi = 1;
  std::size_t lo = hi - 1;
  if (lo + 1 >= timestamps.size() || timestamps[lo] == t) {
    return {lo, lo, 0.0};
  }
  double w = (t - timestamps[lo]) / (timestamps[hi] - timestamps[lo]);
  return {lo, hi, w};
}

Quat slerp_shortest(const Quat& a, const Quat& b, double weight) {
  if (weight == 0.0) return a;
  if (weight == 1.0) return b;
  // Eigen's slerp already takes the shorter arc.
  return a.slerp(weight, b).normalized();
}

RigidTransform interpolate_pose(std::span<const RigidPose> poses, double t) {
  require(!poses.empty(), ErrorCode::OutOfRange, "empty pose timeline");
  std::vector<double> times(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) times[i] = poses[i].timestamp;
  TimeBracket b = bracket_time(times, t);
  if (b.weight == 0.0) return poses[b.lo].transform();
  const RigidPose& p0 = poses[b.lo];
  const RigidPose& p1 = poses[b.hi];
  Quat q = slerp_shortest(p0.rotation, p1.rotation, b.weight);
  Vec3 tr = (1.0 - b.weight) * p0.translation + b.weight * p1.translation;
  return RigidTransform::from(q, tr);
}

void check_unit_quaternion(const Quat& q, const char* what) {
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    fail(ErrorCode::ContractViolation, std::string(what) + ": quaternion is not unit length");
  }
}

}  // namespace hsplat
