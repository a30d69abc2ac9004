#include "hsplat/camera.hpp"

#include "hsplat/error.hpp"

namespace hsplat {

void CameraModel::validate() const {
  require(fx > 0.0 && fy > 0.0, ErrorCode::ContractViolation, "camera focal lengths must be positive");
  require(width > 0 && height > 0, ErrorCode::ContractViolation, "camera size must be positive");
  require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height, ErrorCode::ContractViolation,
          "principal point outside the image");
}

Vec3 CameraModel::center_world() const { return world_to_camera.inverse().translation; }

Mat4 CameraModel::world_to_screen() const {
  Mat4 k = Mat4::Zero();
  k(0, 0) = fx;
  k(0, 2) = cx;
  k(1, 1) = fy;
  k(1, 2) = cy;
  k(2, 2) = 1.0;
  k(3, 2) = 1.0;
  Mat4 view = Mat4::Identity();
  view.topLeftCorner<3, 3>() = world_to_camera.rotation;
  view.topRightCorner<3, 1>() = world_to_camera.translation;
  return k * view;
}

Ray CameraModel::pixel_ray(double x, double y) const {
  Vec3 d_cam((x - cx) / fx, (y - cy) / fy, 1.0);
  const RigidTransform c2w = camera_to_world();
  return {c2w.translation, (c2w.rotation * d_cam).normalized()};
}

std::vector<Ray> CameraModel::pixel_rays() const {
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) rays.push_back(pixel_ray(x, y));
  }
  return rays;
}

CameraModel CameraModel::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx,
                                 double fy, int width, int height) {
  Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  require(x.norm() > 1e-9, ErrorCode::InvalidArgument, "look_at: up is parallel to view direction");
  x.normalize();
  Vec3 y = z.cross(x);
  // Rows of the world-to-camera rotation are the camera axes in world frame.
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  cam.world_to_camera.rotation = r;
  cam.world_to_camera.translation = -(r * eye);
  return cam;
}

}  // namespace hsplat
