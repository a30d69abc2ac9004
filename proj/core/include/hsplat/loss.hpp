#pragma once

#include <span>
#include <vector>

#include "hsplat/camera.hpp"
#include "hsplat/image.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/rasterizer.hpp"
#include "hsplat/ssim.hpp"

namespace hsplat {

struct LossWeights {
  double lambda_r = 0.2;  // SSIM share of the color term
  double lambda_depth = 1.0;
  double lambda_intensity = 1.0;
  double lambda_raydrop = 0.5;
  double lambda_normal = 1e-4;

  /// Throws InvalidArgument for negative weights or lambda_r outside [0, 1].
  void validate() const;
};

/// Unweighted terms. `ssim` holds 1 - SSIM.
struct LossBreakdown {
  double l1 = 0.0;
  double ssim = 0.0;
  double depth = 0.0;
  double intensity = 0.0;
  double raydrop = 0.0;
  double normal = 0.0;
  double total = 0.0;
};

double weighted_total(const LossBreakdown& b, const LossWeights& w);

struct CameraObservation {
  const FrameBuffer* rendered = nullptr;
  const CameraModel* camera = nullptr;
  const Image* target = nullptr;  // 3-channel color in [0, 1]
};

struct LidarObservation {
  const RangeImage* rendered = nullptr;
  const RangeImage* target = nullptr;  // validity from alpha and ray-drop planes
};

/// A ground-truth LiDAR cell holds a return when its alpha is at least 0.5
/// and its ray-drop value is below 0.5.
bool lidar_return_valid(const RangeImage& target, std::size_t cell);

struct LossResult {
  LossBreakdown breakdown;
  std::vector<FrameBufferGrad> camera_grads;
  std::vector<RangeImageGrad> lidar_grads;
};

/// Terms are averaged over the observations of their modality. Depth and
/// intensity use valid ground-truth returns only; depth compares ranges
/// (D / alpha, rendered alpha clamped below at 0.05) so it supervises the same
/// quantity point extraction reads; ray-drop targets are 1 on
/// invalid cells and 0 on valid ones. The normal term compares composited
/// normals with normals from the rendered depth on valid pixels.
LossResult compute_loss(std::span<const CameraObservation> cameras, std::span<const LidarObservation> lidars,
                        const LossWeights& weights, const SsimSettings& ssim_settings = {});

/// Rendered color of a frame buffer as an Image.
Image color_image(const FrameBuffer& fb);

}  // namespace hsplat
