#include "scenes.hpp"

#include <cmath>
#include <numbers>

namespace hsplat::testing {

Mat3 random_rotation(Rng& rng) {
  Quat q(standard_normal(rng), standard_normal(rng), standard_normal(rng), standard_normal(rng));
  return q.normalized().toRotationMatrix();
}

Gaussian2D random_splat(Rng& rng, const Vec3& center, const ShDegrees& degrees, const SplatRanges& r) {
  Gaussian2D g = Gaussian2D::zeros(degrees);
  g.center = center;
  const Mat3 rot = random_rotation(rng);
  g.tangent_u = rot.col(0);
  g.tangent_v = rot.col(1);
  g.log_scale_u = uniform(rng, r.log_scale_min, r.log_scale_max);
  g.log_scale_v = uniform(rng, r.log_scale_min, r.log_scale_max);
  g.opacity_logit = logit(uniform(rng, r.opacity_min, r.opacity_max));
  for (int c = 0; c < 3; ++c) {
    g.sh_color.at(c, 0) = uniform(rng, -1.0, 1.0);  // DC: decoded value in (0.22, 0.78)
    for (int k = 1; k < g.sh_color.coeffs_per_channel(); ++k) g.sh_color.at(c, k) = uniform(rng, -1, 1) * r.sh_amplitude;
  }
  for (ShBlock* b : {&g.sh_intensity, &g.sh_raydrop}) {
    b->at(0, 0) = uniform(rng, -4.0, 4.0);
    for (int k = 1; k < b->coeffs_per_channel(); ++k) b->at(0, k) = uniform(rng, -1, 1) * 4.0 * r.sh_amplitude;
  }
  return g;
}

std::vector<Gaussian2D> random_camera_scene(Rng& rng, std::size_t n, const CameraModel& cam, double near_z,
                                            double far_z, const SplatRanges& r) {
  std::vector<Gaussian2D> out;
  const RigidTransform to_world = cam.camera_to_world();
  for (std::size_t i = 0; i < n; ++i) {
    const double z = uniform(rng, near_z, far_z);
    // Slightly wider than the image so border pixels see partial splats.
    const double x = (uniform(rng, -0.1, 1.1) * cam.width - cam.cx) / cam.fx * z;
    const double y = (uniform(rng, -0.1, 1.1) * cam.height - cam.cy) / cam.fy * z;
    out.push_back(random_splat(rng, to_world.apply(Vec3(x, y, z)), {}, r));
  }
  return out;
}

CameraModel test_camera(int width, int height, double focal) {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.fx = focal;
  cam.fy = focal;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  return cam;
}

std::vector<Gaussian2D> random_shell_scene(Rng& rng, std::size_t n, const Vec3& origin, double r_min, double r_max,
                                           double z_extent, const SplatRanges& r) {
  std::vector<Gaussian2D> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double az = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const double rad = uniform(rng, r_min, r_max);
    const double z = uniform(rng, -z_extent, z_extent);
    out.push_back(random_splat(rng, origin + Vec3(rad * std::cos(az), rad * std::sin(az), z), {}, r));
  }
  return out;
}

LidarModel test_lidar(int channels, int cols, const Vec3& origin, double top, double bottom, double max_range) {
  LidarModel l;
  l.channels = channels;
  l.azimuth_steps = cols;
  l.elevations = LidarModel::uniform_elevations(channels, top, bottom);
  l.max_range = max_range;
  RigidPose p;
  p.translation = origin;
  l.poses = {p};
  return l;
}

}  // namespace hsplat::testing
