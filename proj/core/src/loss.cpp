#include "hsplat/loss.hpp"

#include <cmath>

#include "hsplat/depth_normal.hpp"
#include "hsplat/error.hpp"

namespace hsplat {

void LossWeights::validate() const {
  require(lambda_r >= 0.0 && lambda_r <= 1.0, ErrorCode::InvalidArgument, "lambda_r must lie in [0, 1]");
  require(lambda_depth >= 0.0 && lambda_intensity >= 0.0 && lambda_raydrop >= 0.0 && lambda_normal >= 0.0,
          ErrorCode::InvalidArgument, "loss weights must be non-negative");
}

double weighted_total(const LossBreakdown& b, const LossWeights& w) {
  return (1.0 - w.lambda_r) * b.l1 + w.lambda_r * b.ssim + w.lambda_depth * b.depth +
         w.lambda_intensity * b.intensity + w.lambda_raydrop * b.raydrop + w.lambda_normal * b.normal;
}

bool lidar_return_valid(const RangeImage& target, std::size_t cell) {
  return target.alpha[cell] >= 0.5 && target.raydrop[cell] < 0.5;
}

Image color_image(const FrameBuffer& fb) {
  Image img(fb.width, fb.height, 3);
  img.data = fb.color;
  return img;
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void camera_terms(const CameraObservation& obs, const LossWeights& w, const SsimSettings& ss, double share,
                  LossBreakdown& out, FrameBufferGrad& grad) {
  require(obs.rendered && obs.camera && obs.target, ErrorCode::InvalidArgument, "camera observation incomplete");
  const FrameBuffer& fb = *obs.rendered;
  const Image& gt = *obs.target;
  require(gt.width == fb.width && gt.height == fb.height && gt.channels == 3, ErrorCode::ShapeMismatch,
          "rendered and target image shapes differ");
  grad = FrameBufferGrad(fb.width, fb.height);

  const std::size_t n = fb.color.size();
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) l1 += std::abs(fb.color[i] - gt.data[i]);
  l1 /= static_cast<double>(n);
  const double g_l1 = share * (1.0 - w.lambda_r) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) grad.color[i] += g_l1 * sign(fb.color[i] - gt.data[i]);

  const Image rendered = color_image(fb);
  double dssim = 0.0;
  if (w.lambda_r > 0.0) {
    std::vector<double> g_ssim;
    dssim = 1.0 - ssim_with_gradient(rendered, gt, g_ssim, ss);
    for (std::size_t i = 0; i < n; ++i) grad.color[i] -= share * w.lambda_r * g_ssim[i];
  } else {
    dssim = 1.0 - ssim(rendered, gt, ss);
  }

  double normal_term = 0.0;
  const NormalMap nm = depth_to_normal(fb, *obs.camera);
  std::size_t valid = 0;
  for (std::uint8_t v : nm.valid) valid += v;
  if (valid > 0) {
    std::vector<Vec3> g_depth_normals(fb.pixels(), Vec3::Zero());
    const double scale = share * w.lambda_normal / static_cast<double>(valid);
    for (std::size_t i = 0; i < fb.pixels(); ++i) {
      if (!nm.valid[i]) continue;
      const Vec3 nr(fb.normal[3 * i], fb.normal[3 * i + 1], fb.normal[3 * i + 2]);
      normal_term += 1.0 - nr.dot(nm.normals[i]);
      if (w.lambda_normal > 0.0) {
        for (int k = 0; k < 3; ++k) grad.normal[3 * i + k] -= scale * nm.normals[i][k];
        g_depth_normals[i] = -scale * nr;
      }
    }
    normal_term /= static_cast<double>(valid);
    if (w.lambda_normal > 0.0) depth_to_normal_backward(fb, *obs.camera, nm, g_depth_normals, grad);
  }

  out.l1 += share * l1;
  out.ssim += share * dssim;
  out.normal += share * normal_term;
}

constexpr double kMinRangeAlpha = 0.05;

void lidar_terms(const LidarObservation& obs, const LossWeights& w, double share, LossBreakdown& out,
                 RangeImageGrad& grad) {
  require(obs.rendered && obs.target, ErrorCode::InvalidArgument, "lidar observation incomplete");
  const RangeImage& ri = *obs.rendered;
  const RangeImage& gt = *obs.target;
  require(ri.rows == gt.rows && ri.cols == gt.cols, ErrorCode::ShapeMismatch,
          "rendered and target range image shapes differ");
  grad = RangeImageGrad(ri.rows, ri.cols);
  const std::size_t n = ri.cells();
  std::size_t valid = 0;
  for (std::size_t i = 0; i < n; ++i) valid += lidar_return_valid(gt, i) ? 1 : 0;

  double depth = 0.0, intensity = 0.0, raydrop = 0.0;
  const double gd = valid ? share * w.lambda_depth / static_cast<double>(valid) : 0.0;
  const double gi = valid ? share * w.lambda_intensity / static_cast<double>(valid) : 0.0;
  const double gr = share * w.lambda_raydrop / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = lidar_return_valid(gt, i);
    if (ok) {
      // Ranges are compared after dividing out accumulated alpha, matching
      // point extraction. Tiny alpha is clamped so the ratio stays bounded.
      const double a = std::max(ri.alpha[i], kMinRangeAlpha);
      const double ed = ri.depth[i] / a - gt.depth[i] / gt.alpha[i];
      const double ei = ri.intensity[i] - gt.intensity[i];
      depth += std::abs(ed);
      intensity += ei * ei;
      grad.depth[i] += gd * sign(ed) / a;
      if (ri.alpha[i] > kMinRangeAlpha) grad.alpha[i] -= gd * sign(ed) * ri.depth[i] / (a * a);
      grad.intensity[i] += gi * 2.0 * ei;
    }
    const double er = ri.raydrop[i] - (ok ? 0.0 : 1.0);
    raydrop += er * er;
    grad.raydrop[i] += gr * 2.0 * er;
  }
  if (valid) {
    depth /= static_cast<double>(valid);
    intensity /= static_cast<double>(valid);
  }
  raydrop /= static_cast<double>(n);
  out.depth += share * depth;
  out.intensity += share * intensity;
  out.raydrop += share * raydrop;
}

}  // namespace

LossResult compute_loss(std::span<const CameraObservation> cameras, std::span<const LidarObservation> lidars,
                        const LossWeights& weights, const SsimSettings& ssim_settings) {
  weights.validate();
  require(!cameras.empty() || !lidars.empty(), ErrorCode::EmptyInput, "loss needs at least one observation");
  LossResult r;
  r.camera_grads.resize(cameras.size());
  r.lidar_grads.resize(lidars.size());
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    camera_terms(cameras[i], weights, ssim_settings, 1.0 / static_cast<double>(cameras.size()), r.breakdown,
                 r.camera_grads[i]);
  }
  for (std::size_t i = 0; i < lidars.size(); ++i) {
    lidar_terms(lidars[i], weights, 1.0 / static_cast<double>(lidars.size()), r.breakdown, r.lidar_grads[i]);
  }
  r.breakdown.total = weighted_total(r.breakdown, weights);
  return r;
}

}  // namespace hsplat
