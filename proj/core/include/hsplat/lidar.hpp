#pragma once

#include <limits>
#include <vector>

#include "hsplat/pose.hpp"
#include "hsplat/types.hpp"

namespace hsplat {

/// Spinning LiDAR laid out as a cylindrical range image. Row r has elevation
/// elevations[r]; column c has azimuth azimuth_min + c * (azimuth_max -
/// azimuth_min) / azimuth_steps. Sensor frame: x forward, y left, z up.
struct LidarModel {
  int channels = 32;
  int azimuth_steps = 512;
  std::vector<double> elevations;  // radians, strictly monotonic
  double azimuth_min = -3.14159265358979323846;
  double azimuth_max = 3.14159265358979323846;
  double max_range = 80.0;
  std::vector<RigidPose> poses;  // sensor-to-world, one per scan time

  void validate() const;

  double azimuth(int col) const;
  Vec3 direction_sensor(int row, int col) const;
  /// Throws OutOfRange outside the pose timeline.
  RigidTransform pose_at(double t) const;

  std::size_t cells() const { return static_cast<std::size_t>(channels) * azimuth_steps; }

  /// `channels` angles from `top` down to `bottom`, evenly spaced.
  static std::vector<double> uniform_elevations(int channels, double top, double bottom);
};

/// Rays laid out row-major on a rows x cols grid; ray i belongs to cell i.
struct RayBundle {
  int rows = 0;
  int cols = 0;
  std::vector<Ray> rays;
  double max_range = std::numeric_limits<double>::infinity();
};

/// One ray per (row, col) from the sensor origin at time t. No per-column
/// motion compensation: a single pose covers the whole sweep.
RayBundle generate_rays(const LidarModel& lidar, double t);

/// Per-cell composited depth / intensity / ray-drop probability. Cells
/// without hits hold zeros.
struct RangeImage {
  int rows = 0;
  int cols = 0;
  std::vector<double> depth;
  std::vector<double> intensity;
  std::vector<double> raydrop;
  std::vector<double> alpha;

  RangeImage() = default;
  RangeImage(int r, int c);
  std::size_t cells() const { return static_cast<std::size_t>(rows) * cols; }
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * cols + col; }
};

struct RangeImageGrad {
  int rows = 0;
  int cols = 0;
  std::vector<double> depth;
  std::vector<double> intensity;
  std::vector<double> raydrop;
  std::vector<double> alpha;

  RangeImageGrad() = default;
  RangeImageGrad(int r, int c);
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> intensity;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Emits sensor_origin + (D / alpha) * direction for every cell with alpha above
/// alpha_threshold and ray-drop below drop_threshold.
PointCloud extract_point_cloud(const RangeImage& ri, const LidarModel& lidar, double t,
                               double drop_threshold = 0.5, double alpha_threshold = 0.5);

}  // namespace hsplat
