#include "hsplat/lidar.hpp"

#include <cmath>

#include "hsplat/error.hpp"

namespace hsplat {

void LidarModel::validate() const {
  require(channels > 0 && azimuth_steps > 0, ErrorCode::ContractViolation,
          "lidar needs positive channel and azimuth counts");
  require(elevations.size() == static_cast<std::size_t>(channels), ErrorCode::ShapeMismatch,
          "lidar elevation table length differs from channel count");
  if (channels > 1) {
    const bool increasing = elevations[1] > elevations[0];
    for (int r = 1; r < channels; ++r) {
      const bool ok = increasing ? elevations[r] > elevations[r - 1] : elevations[r] < elevations[r - 1];
      require(ok, ErrorCode::ContractViolation, "lidar elevations must be strictly monotonic");
    }
  }
  require(azimuth_max > azimuth_min, ErrorCode::ContractViolation, "empty azimuth range");
  require(max_range > 0.0, ErrorCode::ContractViolation, "max range must be positive");
  require(!poses.empty(), ErrorCode::ContractViolation, "lidar has no poses");
}

double LidarModel::azimuth(int col) const {
  return azimuth_min + col * (azimuth_max - azimuth_min) / azimuth_steps;
}

Vec3 LidarModel::direction_sensor(int row, int col) const {
  const double el = elevations.at(row);
  const double az = azimuth(col);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

RigidTransform LidarModel::pose_at(double t) const { return interpolate_pose(poses, t); }

std::vector<double> LidarModel::uniform_elevations(int channels, double top, double bottom) {
  std::vector<double> out(channels);
  for (int r = 0; r < channels; ++r) {
    out[r] = channels == 1 ? top : top + (bottom - top) * r / (channels - 1);
  }
  return out;
}

RayBundle generate_rays(const LidarModel& lidar, double t) {
  lidar.validate();
  const RigidTransform pose = lidar.pose_at(t);
  RayBundle bundle;
  bundle.rows = lidar.channels;
  bundle.cols = lidar.azimuth_steps;
  bundle.max_range = lidar.max_range;
  bundle.rays.reserve(lidar.cells());
  for (int r = 0; r < lidar.channels; ++r) {
    for (int c = 0; c < lidar.azimuth_steps; ++c) {
      Vec3 d = pose.rotation * lidar.direction_sensor(r, c);
      bundle.rays.push_back({pose.translation, d.normalized()});
    }
  }
  return bundle;
}

RangeImage::RangeImage(int r, int c)
    : rows(r),
      cols(c),
      depth(static_cast<std::size_t>(r) * c, 0.0),
      intensity(static_cast<std::size_t>(r) * c, 0.0),
      raydrop(static_cast<std::size_t>(r) * c, 0.0),
      alpha(static_cast<std::size_t>(r) * c, 0.0) {}

RangeImageGrad::RangeImageGrad(int r, int c)
    : rows(r),
      cols(c),
      depth(static_cast<std::size_t>(r) * c, 0.0),
      intensity(static_cast<std::size_t>(r) * c, 0.0),
      raydrop(static_cast<std::size_t>(r) * c, 0.0),
      alpha(static_cast<std::size_t>(r) * c, 0.0) {}

PointCloud extract_point_cloud(const RangeImage& ri, const LidarModel& lidar, double t,
                               double drop_threshold, double alpha_threshold) {
  lidar.validate();
  require(ri.rows == lidar.channels && ri.cols == lidar.azimuth_steps, ErrorCode::ShapeMismatch,
          "range image shape differs from lidar model");
  const RigidTransform pose = lidar.pose_at(t);
  PointCloud cloud;
  for (int r = 0; r < ri.rows; ++r) {
    for (int c = 0; c < ri.cols; ++c) {
      const std::size_t i = ri.index(r, c);
      if (!(ri.alpha[i] > alpha_threshold) || !(ri.raydrop[i] < drop_threshold)) continue;
      const Vec3 d = (pose.rotation * lidar.direction_sensor(r, c)).normalized();
      // Depth is alpha-weighted; the surface point sits at depth / alpha.
      cloud.points.push_back(pose.translation + (ri.depth[i] / ri.alpha[i]) * d);
      cloud.intensity.push_back(ri.intensity[i]);
    }
  }
  return cloud;
}

}  // namespace hsplat
