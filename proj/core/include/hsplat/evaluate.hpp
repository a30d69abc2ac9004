#pragma once

#include <optional>
#include <vector>

#include "hsplat/bvh.hpp"
#include "hsplat/image.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/metrics.hpp"
#include "hsplat/rasterizer.hpp"
#include "hsplat/raytracer.hpp"
#include "hsplat/scene_graph.hpp"
#include "hsplat/ssim.hpp"
#include "hsplat/trainer.hpp"

namespace hsplat {

struct EvalSettings {
  double f_tau = 0.05;
  double drop_threshold = 0.5;   // cells with ray-drop >= this are removed from clouds
  double alpha_threshold = 0.5;  // and cells with alpha <= this
  SsimSettings ssim;
  std::optional<Aabb> crop;      // when set, clouds keep only points inside this box
  /// evaluate_scene only: per sweep, crop clouds to this node's center bounds
  /// at the sweep time, grown by crop_margin. Overrides `crop`.
  std::optional<std::size_t> crop_node;
  double crop_margin = 0.15;
};

/// Collects prediction / reference pairs and reduces them into a MetricReport.
///
/// LiDAR: CD and F-score per sweep on the extracted clouds, averaged over
/// sweeps; range (D / alpha) and intensity errors pooled over cells with a
/// valid reference return. Camera: SSIM averaged over images, PSNR from the pooled MSE.
class EvalAccumulator {
 public:
  explicit EvalAccumulator(EvalSettings settings = {}) : settings_(std::move(settings)) {}

  void add_camera(const Image& predicted, const Image& reference);
  /// `crop` replaces the settings' crop box for this sweep when set.
  void add_lidar(const RangeImage& predicted, const RangeImage& reference, const LidarModel& lidar, double t,
                 const std::optional<Aabb>& crop = std::nullopt);

  MetricReport report() const;

 private:
  EvalSettings settings_;
  double ssim_sum_ = 0.0;
  double sq_err_sum_ = 0.0;
  std::size_t color_values_ = 0;
  std::size_t images_ = 0;
  double cd_sum_ = 0.0;
  double f_sum_ = 0.0;
  double precision_sum_ = 0.0;
  double recall_sum_ = 0.0;
  std::size_t cloud_pairs_ = 0;
  std::vector<double> depth_pred_, depth_ref_;
  std::vector<double> intensity_pred_, intensity_ref_;
  std::size_t predicted_points_ = 0;
  std::size_t reference_points_ = 0;
};

/// Renders `scene` at every observation of `data` and compares with the targets.
MetricReport evaluate_scene(const SceneGraph& scene, const Dataset& data, const EvalSettings& settings = {},
                            const RasterSettings& raster = {}, const TraceSettings& trace = {});

}  // namespace hsplat
