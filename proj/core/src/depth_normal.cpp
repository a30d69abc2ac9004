#include "hsplat/depth_normal.hpp"

#include "hsplat/error.hpp"

namespace hsplat {
namespace {

inline Vec3 pixel_direction(const CameraModel& cam, int x, int y) {
  return {(x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0};
}

inline Vec3 back_project(const FrameBuffer& fb, const CameraModel& cam, int x, int y) {
  std::size_t i = fb.index(x, y);
  return (fb.depth[i] / fb.alpha[i]) * pixel_direction(cam, x, y);
}

}  // namespace

NormalMap depth_to_normal(const FrameBuffer& fb, const CameraModel& cam, double alpha_threshold) {
  require(fb.width == cam.width && fb.height == cam.height, ErrorCode::ShapeMismatch,
          "frame buffer and camera sizes differ");
  require(alpha_threshold > 0.0, ErrorCode::InvalidArgument, "alpha threshold must be positive");
  NormalMap out;
  out.width = fb.width;
  out.height = fb.height;
  out.normals.assign(fb.pixels(), Vec3::Zero());
  out.valid.assign(fb.pixels(), 0);
  auto ok = [&](int x, int y) { return fb.alpha[fb.index(x, y)] >= alpha_threshold; };

  for (int y = 1; y + 1 < fb.height; ++y) {
    for (int x = 1; x + 1 < fb.width; ++x) {
      if (!ok(x, y) || !ok(x - 1, y) || !ok(x + 1, y) || !ok(x, y - 1) || !ok(x, y + 1)) continue;
      const Vec3 dx = back_project(fb, cam, x + 1, y) - back_project(fb, cam, x - 1, y);
      const Vec3 dy = back_project(fb, cam, x, y + 1) - back_project(fb, cam, x, y - 1);
      const Vec3 m = dy.cross(dx);
      const double len = m.norm();
      if (!(len > 0.0)) continue;
      out.normals[fb.index(x, y)] = m / len;
      out.valid[fb.index(x, y)] = 1;
    }
  }
  return out;
}

void depth_to_normal_backward(const FrameBuffer& fb, const CameraModel& cam,
                              const NormalMap& normals, const std::vector<Vec3>& grad_normals,
                              FrameBufferGrad& out) {
  require(grad_normals.size() == fb.pixels() && normals.normals.size() == fb.pixels() &&
              out.depth.size() == fb.pixels(),
          ErrorCode::ShapeMismatch, "depth_to_normal_backward: size mismatch");

  std::vector<Vec3> g_points(fb.pixels(), Vec3::Zero());
  for (int y = 1; y + 1 < fb.height; ++y) {
    for (int x = 1; x + 1 < fb.width; ++x) {
      const std::size_t i = fb.index(x, y);
      if (!normals.valid[i]) continue;
      const Vec3& g_n = grad_normals[i];
      if (g_n.isZero(0)) continue;
      const Vec3 dx = back_project(fb, cam, x + 1, y) - back_project(fb, cam, x - 1, y);
      const Vec3 dy = back_project(fb, cam, x, y + 1) - back_project(fb, cam, x, y - 1);
      const Vec3 m = dy.cross(dx);
      const double len = m.norm();
      const Vec3 n = m / len;
      const Vec3 g_m = (g_n - n * n.dot(g_n)) / len;
      const Vec3 g_dy = dx.cross(g_m);
      const Vec3 g_dx = g_m.cross(dy);
      g_points[fb.index(x + 1, y)] += g_dx;
      g_points[fb.index(x - 1, y)] -= g_dx;
      g_points[fb.index(x, y + 1)] += g_dy;
      g_points[fb.index(x, y - 1)] -= g_dy;
    }
  }

  for (int y = 0; y < fb.height; ++y) {
    for (int x = 0; x < fb.width; ++x) {
      const std::size_t i = fb.index(x, y);
      if (g_points[i].isZero(0)) continue;
      const double g_surface = pixel_direction(cam, x, y).dot(g_points[i]);
      const double a = fb.alpha[i];
      out.depth[i] += g_surface / a;
      out.alpha[i] -= g_surface * fb.depth[i] / (a * a);
    }
  }
}

}  // namespace hsplat
