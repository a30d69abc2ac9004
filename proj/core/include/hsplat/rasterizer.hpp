#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hsplat/camera.hpp"
#include "hsplat/gaussian.hpp"

namespace hsplat {

struct RasterSettings {
  int tile_size = 16;
  double near_plane = 0.01;
  double cutoff_sigma = 3.0;             // kernel support radius in scaled units
  double min_contribution = 1.0 / 255.0; // skip alpha * G below this
  double termination_transmittance = 1e-4;
  Vec3 background = Vec3::Zero();
};

/// Per-pixel composited channels. Depth is the alpha-weighted expected camera
/// z (0 where nothing contributed); normals are camera-frame and unnormalized.
struct FrameBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> color;  // 3 per pixel, row-major
  std::vector<double> depth;
  std::vector<double> alpha;
  std::vector<double> normal;  // 3 per pixel
  std::vector<int> count;      // contributing splats

  FrameBuffer() = default;
  FrameBuffer(int w, int h);

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  Vec3 color_at(int x, int y) const;
  Vec3 normal_at(int x, int y) const;
};

/// Upstream gradients, same layout as FrameBuffer (no count channel).
struct FrameBufferGrad {
  int width = 0;
  int height = 0;
  std::vector<double> color;
  std::vector<double> depth;
  std::vector<double> alpha;
  std::vector<double> normal;

  FrameBufferGrad() = default;
  FrameBufferGrad(int w, int h);
};

/// Affine map from splat-local (u, v, 1) to screen homogeneous (x z, y z, z):
/// rows 0, 1, 3 and columns 0, 1, 3 of W H.
using SplatScreenTransform = Eigen::Matrix3d;

SplatScreenTransform splat_screen_transform(const Gaussian2D& g, const Mat4& world_to_screen);

struct SplatPixelHit {
  SplatLocalPoint local;
  double depth = 0.0;  // camera z
};

/// Ray/splat intersection for the pixel-center ray through (x, y), found as
/// the common point of the two pixel planes and the splat plane. Empty when
/// the splat plane is parallel to the ray or the hit is not beyond `near_plane`.
std::optional<SplatPixelHit> intersect_splat_pixel(const SplatScreenTransform& t, double x, double y,
                                                   double near_plane = 0.01);
std::optional<SplatPixelHit> intersect_splat_pixel(const Gaussian2D& g, const CameraModel& cam,
                                                   double x, double y, double near_plane = 0.01);

/// Camera-frame unit normal of a splat, oriented toward the camera.
Vec3 camera_facing_normal(const Gaussian2D& g, const CameraModel& cam);

/// Tile-based forward rasterizer that keeps what backward() needs.
class Rasterizer {
 public:
  explicit Rasterizer(RasterSettings settings = {});
  ~Rasterizer();
  Rasterizer(Rasterizer&&) noexcept;
  Rasterizer& operator=(Rasterizer&&) noexcept;

  const RasterSettings& settings() const { return settings_; }

  FrameBuffer forward(std::span<const Gaussian2D> prims, const CameraModel& cam);

  /// Gradients on raw parameters of the primitives passed to the last
  /// forward(). Throws ContractViolation without a matching forward state.
  GradientBuffer backward(std::span<const Gaussian2D> prims, const FrameBufferGrad& upstream) const;

  /// Indices of primitives in compositing order (center depth, then index).
  const std::vector<std::uint32_t>& sort_order() const;

 private:
  struct State;
  RasterSettings settings_;
  std::unique_ptr<State> state_;
};

FrameBuffer rasterize(std::span<const Gaussian2D> prims, const CameraModel& cam,
                      const RasterSettings& settings = {});

}  // namespace hsplat
