#include "hsplat/evaluate.hpp"

#include "hsplat/error.hpp"
#include "hsplat/loss.hpp"
#include "hsplat/synthetic.hpp"

namespace hsplat {
namespace {

PointCloud cropped(PointCloud cloud, const std::optional<Aabb>& crop) {
  if (!crop) return cloud;
  PointCloud out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if ((p.array() >= crop->lo.array()).all() && (p.array() <= crop->hi.array()).all()) {
      out.points.push_back(p);
      out.intensity.push_back(cloud.intensity[i]);
    }
  }
  return out;
}

}  // namespace

void EvalAccumulator::add_camera(const Image& predicted, const Image& reference) {
  require(predicted.same_shape(reference), ErrorCode::ShapeMismatch, "eval: camera image shapes differ");
  ssim_sum_ += ssim(predicted, reference, settings_.ssim);
  for (std::size_t i = 0; i < predicted.data.size(); ++i) {
    const double d = predicted.data[i] - reference.data[i];
    sq_err_sum_ += d * d;
  }
  color_values_ += predicted.data.size();
  ++images_;
}

void EvalAccumulator::add_lidar(const RangeImage& predicted, const RangeImage& reference, const LidarModel& lidar,
                                double t, const std::optional<Aabb>& crop) {
  const std::optional<Aabb>& box = crop ? crop : settings_.crop;
  require(predicted.rows == reference.rows && predicted.cols == reference.cols, ErrorCode::ShapeMismatch,
          "eval: range image shapes differ");
  for (std::size_t i = 0; i < reference.cells(); ++i) {
    if (!lidar_return_valid(reference, i)) continue;
    // Ranges, as used for point extraction; a cell with no coverage reads 0.
    depth_pred_.push_back(predicted.alpha[i] > 0.0 ? predicted.depth[i] / predicted.alpha[i] : 0.0);
    depth_ref_.push_back(reference.depth[i] / reference.alpha[i]);
    intensity_pred_.push_back(predicted.intensity[i]);
    intensity_ref_.push_back(reference.intensity[i]);
  }
  const PointCloud pred = cropped(
      extract_point_cloud(predicted, lidar, t, settings_.drop_threshold, settings_.alpha_threshold), box);
  const PointCloud ref = cropped(
      extract_point_cloud(reference, lidar, t, settings_.drop_threshold, settings_.alpha_threshold), box);
  predicted_points_ += pred.points.size();
  reference_points_ += ref.points.size();
  if (pred.points.empty() && ref.points.empty()) return;
  require(!pred.points.empty() && !ref.points.empty(), ErrorCode::EmptyInput,
          "eval: one of the point clouds of a sweep is empty");
  cd_sum_ += chamfer_distance(pred.points, ref.points);
  const FScore f = f_score(pred.points, ref.points, settings_.f_tau);
  f_sum_ += f.f;
  precision_sum_ += f.precision;
  recall_sum_ += f.recall;
  ++cloud_pairs_;
}

MetricReport EvalAccumulator::report() const {
  MetricReport r;
  if (images_ > 0) {
    r.ssim = ssim_sum_ / static_cast<double>(images_);
    r.psnr = psnr_from_mse(sq_err_sum_ / static_cast<double>(color_values_));
  }
  if (cloud_pairs_ > 0) {
    const double n = static_cast<double>(cloud_pairs_);
    r.cd = cd_sum_ / n;
    r.f_score = f_sum_ / n;
    r.precision = precision_sum_ / n;
    r.recall = recall_sum_ / n;
  }
  if (!depth_ref_.empty()) {
    const ErrorStats d = error_stats(depth_pred_, depth_ref_);
    const ErrorStats i = error_stats(intensity_pred_, intensity_ref_);
    r.depth_rmse = d.rmse;
    r.depth_medae = d.medae;
    r.intensity_rmse = i.rmse;
    r.intensity_medae = i.medae;
  }
  r.predicted_points = predicted_points_;
  r.reference_points = reference_points_;
  return r;
}

MetricReport evaluate_scene(const SceneGraph& scene, const Dataset& data, const EvalSettings& settings,
                            const RasterSettings& raster, const TraceSettings& trace) {
  require(!data.empty(), ErrorCode::EmptyInput, "eval: no observations");
  EvalAccumulator acc(settings);
  Rasterizer rasterizer(raster);
  for (const CameraFrame& f : data.cameras) {
    const FlatScene flat = flatten(scene, f.timestamp);
    acc.add_camera(color_image(rasterizer.forward(flat.primitives, f.camera)), f.color);
  }
  for (const LidarFrame& f : data.lidars) {
    const FlatScene flat = flatten(scene, f.timestamp);
    const RangeImage pred = hsplat::trace(flat.primitives, generate_rays(f.lidar, f.timestamp), trace);
    std::optional<Aabb> crop;
    if (settings.crop_node) {
      Aabb box = node_world_bounds(scene, *settings.crop_node, f.timestamp);
      box.lo.array() -= settings.crop_margin;
      box.hi.array() += settings.crop_margin;
      crop = box;
    }
    acc.add_lidar(pred, f.target, f.lidar, f.timestamp, crop);
  }
  return acc.report();
}

}  // namespace hsplat
