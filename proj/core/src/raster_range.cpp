#include "hsplat/raster_range.hpp"

#include <cmath>
#include <numbers>

#include "hsplat/error.hpp"

namespace hsplat {

RangeImage rasterize_range_image(std::span<const Gaussian2D> prims, const LidarModel& lidar, double t,
                                 int faces, double pixels_per_column, const RasterSettings& settings) {
  lidar.validate();
  require(faces >= 3, ErrorCode::InvalidArgument, "need at least three faces to cover the sweep");
  require(pixels_per_column > 0.0, ErrorCode::InvalidArgument, "pixel density must be positive");

  const RigidTransform pose = lidar.pose_at(t);
  const double sector = 2.0 * std::numbers::pi / faces;
  const double half = 0.5 * sector;
  const int width = std::max(2, static_cast<int>(std::ceil(pixels_per_column * lidar.azimuth_steps / faces)));
  const double f = 0.5 * width / std::tan(half);
  double max_el = 0.0;
  for (double el : lidar.elevations) max_el = std::max(max_el, std::abs(el));
  const double max_tan = std::tan(max_el) / std::cos(half);
  const int height = 2 * static_cast<int>(std::ceil(f * max_tan)) + 3;

  RangeImage out(lidar.channels, lidar.azimuth_steps);
  Rasterizer raster(settings);
  for (int face = 0; face < faces; ++face) {
    const double yaw = lidar.azimuth_min + (face + 0.5) * sector;
    // Sensor-frame axes of the face camera: z forward, x right, y down.
    const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
    const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
    const Vec3 down(0.0, 0.0, -1.0);
    Mat3 cam_from_sensor;
    cam_from_sensor.row(0) = right;
    cam_from_sensor.row(1) = down;
    cam_from_sensor.row(2) = forward;

    CameraModel cam;
    cam.fx = f;
    cam.fy = f;
    cam.width = width;
    cam.height = height;
    cam.cx = 0.5 * (width - 1);
    cam.cy = 0.5 * (height - 1);
    cam.world_to_camera.rotation = cam_from_sensor * pose.rotation.transpose();
    cam.world_to_camera.translation = -(cam.world_to_camera.rotation * pose.translation);
    const FrameBuffer fb = raster.forward(prims, cam);

    for (int c = 0; c < lidar.azimuth_steps; ++c) {
      const double rel = std::remainder(lidar.azimuth(c) - yaw, 2.0 * std::numbers::pi);
      if (rel < -half || rel >= half) continue;
      for (int r = 0; r < lidar.channels; ++r) {
        const Vec3 d = cam_from_sensor * lidar.direction_sensor(r, c).normalized();
        if (!(d.z() > 0.0)) continue;
        const int px = static_cast<int>(std::lround(cam.cx + f * d.x() / d.z()));
        const int py = static_cast<int>(std::lround(cam.cy + f * d.y() / d.z()));
        if (px < 0 || py < 0 || px >= width || py >= height) continue;
        const std::size_t pi = fb.index(px, py);
        const std::size_t cell = out.index(r, c);
        out.alpha[cell] = fb.alpha[pi];
        out.depth[cell] = fb.depth[pi] / d.z();
      }
    }
  }
  return out;
}

}  // namespace hsplat
