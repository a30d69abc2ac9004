#pragma once

#include <cstdint>
#include <vector>

#include "hsplat/camera.hpp"
#include "hsplat/rasterizer.hpp"

namespace hsplat {

struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normals;     // camera frame, unit or zero
  std::vector<std::uint8_t> valid;
};

/// Normals from central differences of the back-projected surface depth
/// (depth / alpha). A pixel is valid when it is not on the image border and it
/// and its four neighbours have alpha >= alpha_threshold; invalid pixels get a
/// zero normal.
NormalMap depth_to_normal(const FrameBuffer& fb, const CameraModel& cam, double alpha_threshold = 0.5);

/// Adds dL/d(depth) and dL/d(alpha) for upstream gradients on the normals of
/// valid pixels into `out`.
void depth_to_normal_backward(const FrameBuffer& fb, const CameraModel& cam,
                              const NormalMap& normals, const std::vector<Vec3>& grad_normals,
                              FrameBufferGrad& out);

}  // namespace hsplat
