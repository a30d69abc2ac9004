#pragma once

#include <vector>

#include "hsplat/types.hpp"

namespace hsplat {

/// Pinhole camera. Pixel (x, y) with integer x, y refers to the pixel
/// center; the camera looks along +z of its own frame, +x right, +y down.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  RigidTransform world_to_camera;

  /// Throws ContractViolation for fx, fy <= 0 or a principal point outside the image.
  void validate() const;

  Vec3 center_world() const;
  RigidTransform camera_to_world() const { return world_to_camera.inverse(); }

  /// World-to-screen matrix W: W (X, 1) = (x z, y z, z, z).
  Mat4 world_to_screen() const;

  /// Unit-direction world ray through pixel (x, y).
  Ray pixel_ray(double x, double y) const;

  /// One ray per pixel, row-major.
  std::vector<Ray> pixel_rays() const;

  /// Camera at `eye` looking at `target`, with `up` roughly opposite the image y axis.
  static CameraModel look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx,
                             double fy, int width, int height);
};

}  // namespace hsplat
