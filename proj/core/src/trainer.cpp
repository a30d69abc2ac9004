#include "hsplat/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "hsplat/error.hpp"
#include "hsplat/io/scene_file.hpp"
#include "hsplat/random.hpp"

namespace hsplat {
namespace {

struct Group {
  double timestamp = 0.0;
  std::vector<std::size_t> cameras;
  std::vector<std::size_t> lidars;
};

std::vector<Group> group_by_time(const Dataset& data, const TrainConfig& cfg) {
  std::map<double, Group> groups;
  if (cfg.use_camera) {
    for (std::size_t i = 0; i < data.cameras.size(); ++i) {
      Group& g = groups[data.cameras[i].timestamp];
      g.timestamp = data.cameras[i].timestamp;
      g.cameras.push_back(i);
    }
  }
  if (cfg.use_lidar) {
    for (std::size_t i = 0; i < data.lidars.size(); ++i) {
      Group& g = groups[data.lidars[i].timestamp];
      g.timestamp = data.lidars[i].timestamp;
      g.lidars.push_back(i);
    }
  }
  std::vector<Group> out;
  for (auto& [t, g] : groups) out.push_back(std::move(g));
  return out;
}

double decayed_rate(double start, double end, int iteration, int iterations) {
  if (iterations <= 1 || start <= 0.0 || end <= 0.0) return start;
  const double s = std::clamp(static_cast<double>(iteration) / (iterations - 1), 0.0, 1.0);
  return std::exp((1.0 - s) * std::log(start) + s * std::log(end));
}

// Mean screen-space (NDC) positional gradient magnitude from a camera's world-space gradients.
void accumulate_screen_gradients(const FlatScene& flat, const GradientBuffer& camera_grads, const CameraModel& cam,
                                 double near_plane, DensifyAccumulator& stats) {
  const Mat3& r = cam.world_to_camera.rotation;
  for (std::size_t i = 0; i < flat.primitives.size(); ++i) {
    auto row = camera_grads.row(i);
    bool touched = false;
    for (double v : row) {
      if (v != 0.0) {
        touched = true;
        break;
      }
    }
    if (!touched) continue;
    const Vec3 pc = cam.world_to_camera.apply(flat.primitives[i].center);
    if (!(pc.z() > near_plane)) continue;
    const Vec3 g = r * Vec3(row[ParamLayout::kCenter], row[ParamLayout::kCenter + 1], row[ParamLayout::kCenter + 2]);
    const double gx = g.x() * pc.z() / cam.fx * 0.5 * cam.width;
    const double gy = g.y() * pc.z() / cam.fy * 0.5 * cam.height;
    stats.add(i, std::sqrt(gx * gx + gy * gy));
  }
}

struct DeformOptimizer {
  std::vector<AdamMoments> moments;  // per node

  void sync(const SceneGraph& graph, const AdamSettings& s) {
    moments.assign(graph.nodes.size(), AdamMoments(s));
  }
};

}  // namespace

double scene_extent(const SceneGraph& graph) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  bool any = false;
  for (const SceneNode& node : graph.nodes) {
    for (const Gaussian2D& g : node.primitives) {
      lo = lo.cwiseMin(g.center);
      hi = hi.cwiseMax(g.center);
      any = true;
    }
  }
  return any ? 0.5 * (hi - lo).norm() : 0.0;
}

std::string TrainLog::to_text() const {
  std::string out;
  char buf[512];
  for (const TrainLogEntry& e : entries) {
    std::snprintf(buf, sizeof(buf),
                  "iter=%d t=%.17g total=%.17g l1=%.17g dssim=%.17g depth=%.17g intensity=%.17g raydrop=%.17g "
                  "normal=%.17g primitives=%zu\n",
                  e.iteration, e.timestamp, e.loss.total, e.loss.l1, e.loss.ssim, e.loss.depth, e.loss.intensity,
                  e.loss.raydrop, e.loss.normal, e.primitives);
    out += buf;
  }
  for (const DensifyEvent& d : densify_events) {
    std::snprintf(buf, sizeof(buf), "densify iter=%d split=%zu cloned=%zu removed=%zu primitives=%zu\n", d.iteration,
                  d.split, d.cloned, d.removed, d.primitives_after);
    out += buf;
  }
  return out;
}

FitResult fit(const SceneGraph& initial, const Dataset& data, const TrainConfig& cfg, const FitCallback& callback) {
  require(!data.empty(), ErrorCode::EmptyInput, "fit: empty dataset");
  require(cfg.iterations >= 0, ErrorCode::InvalidArgument, "fit: negative iteration count");
  cfg.weights.validate();
  initial.validate();

  FitResult result{initial, {}};
  if (cfg.iterations == 0) return result;
  SceneGraph& scene = result.scene;

  const std::vector<Group> groups = group_by_time(data, cfg);
  require(!groups.empty(), ErrorCode::EmptyInput, "fit: no observations for the enabled modalities");

  double extent = cfg.scene_extent > 0.0 ? cfg.scene_extent : scene_extent(scene);
  if (!(extent > 0.0)) extent = 1.0;

  const ParamLayout layout(scene.degrees);
  ParamOptimizer optimizer(layout, scene.primitive_count(), cfg.adam);
  DensifyAccumulator stats;
  stats.resize(scene.primitive_count());
  DeformOptimizer deform_opt;
  deform_opt.sync(scene, cfg.adam);
  AdamMoments pose_moments(cfg.adam);

  Rng rng(cfg.seed);
  Rasterizer raster(cfg.raster);

  for (int it = 0; it < cfg.iterations; ++it) {
    const Group& group = groups[uniform_index(rng, groups.size())];
    const double t = group.timestamp;
    const FlatScene flat = flatten(scene, t);

    std::vector<FrameBuffer> frames;
    std::vector<CameraObservation> cam_obs;
    const CameraFrame* cam_frame = nullptr;
    if (!group.cameras.empty()) {
      cam_frame = &data.cameras[group.cameras[uniform_index(rng, group.cameras.size())]];
      frames.push_back(raster.forward(flat.primitives, cam_frame->camera));
    }
    std::vector<RangeImage> sweeps;
    std::vector<RayTracer> tracers;
    std::vector<LidarObservation> lidar_obs;
    if (!group.lidars.empty()) {
      const TraceScene trace_scene = TraceScene::build(flat.primitives);
      for (std::size_t li : group.lidars) {
        tracers.emplace_back(cfg.trace);
        sweeps.push_back(tracers.back().forward(flat.primitives, trace_scene, generate_rays(data.lidars[li].lidar, t)));
      }
    }
    if (cam_frame) cam_obs.push_back({&frames[0], &cam_frame->camera, &cam_frame->color});
    for (std::size_t k = 0; k < group.lidars.size(); ++k) {
      lidar_obs.push_back({&sweeps[k], &data.lidars[group.lidars[k]].target});
    }

    const LossResult loss = compute_loss(cam_obs, lidar_obs, cfg.weights, cfg.ssim);
    if (!std::isfinite(loss.breakdown.total)) {
      fail(ErrorCode::NonFinite, "non-finite loss at iteration " + std::to_string(it));
    }

    GradientBuffer world(flat.primitives.size(), layout);
    if (cam_frame) {
      const GradientBuffer g = raster.backward(flat.primitives, loss.camera_grads[0]);
      for (std::size_t k = 0; k < g.values().size(); ++k) world.values()[k] += g.values()[k];
      accumulate_screen_gradients(flat, g, cam_frame->camera, cfg.raster.near_plane, stats);
    }
    for (std::size_t k = 0; k < tracers.size(); ++k) {
      const GradientBuffer g = tracers[k].backward(flat.primitives, loss.lidar_grads[k]);
      for (std::size_t j = 0; j < g.values().size(); ++j) world.values()[j] += g.values()[j];
    }

    GradientBuffer canonical(flat.primitives.size(), layout);
    DeformGradients deform_grads = zero_deform_gradients(scene);
    pull_back_gradients(scene, flat, world, canonical, &deform_grads);

    const double center_rate = decayed_rate(cfg.rates.center * extent, cfg.rates.center_final * extent, it,
                                            cfg.iterations);
    try {
      ParamBuffer params = scene.pack_parameters();
      optimizer.step(params, canonical, cfg.rates, center_rate);
      scene.unpack_parameters(params);
    } catch (const Error& e) {
      fail(e.code(), std::string(e.what()) + " at iteration " + std::to_string(it));
    }

    if (cfg.optimize_deform) {
      for (std::size_t n = 0; n < scene.nodes.size(); ++n) {
        SceneNode& node = scene.nodes[n];
        if (node.kind != NodeKind::Deformable || node.primitives.empty()) continue;
        std::vector<double> x, g;
        for (std::size_t k = 0; k < node.deform.size(); ++k) {
          for (std::size_t i = 0; i < node.primitives.size(); ++i) {
            for (int a = 0; a < 3; ++a) {
              x.push_back(node.deform[k].offsets[i][a]);
              g.push_back(deform_grads.offsets[n][k][i][a]);
            }
          }
        }
        deform_opt.moments[n].update(x, g, [&](std::size_t) { return center_rate; });
        std::size_t p = 0;
        for (auto& kf : node.deform) {
          for (auto& off : kf.offsets) {
            off = Vec3(x[p], x[p + 1], x[p + 2]);
            p += 3;
          }
        }
      }
    }

    if (cfg.optimize_poses && scene.has_movable_nodes()) {
      std::vector<double> x, g;
      for (std::size_t n = 1; n < scene.nodes.size(); ++n) {
        const SceneNode& node = scene.nodes[n];
        Vec3 sum = Vec3::Zero();
        const std::size_t off = scene.node_offset(n);
        for (std::size_t i = 0; i < node.primitives.size(); ++i) {
          auto row = world.row(off + i);
          sum += Vec3(row[0], row[1], row[2]);
        }
        for (std::size_t k = 0; k < node.poses.size(); ++k) {
          double w = 0.0;
          if (k == flat.bracket.lo) w += 1.0 - flat.bracket.weight;
          if (k == flat.bracket.hi && flat.bracket.weight != 0.0) w += flat.bracket.weight;
          for (int a = 0; a < 3; ++a) {
            x.push_back(node.poses[k].translation[a]);
            g.push_back(w * sum[a]);
          }
        }
      }
      pose_moments.update(x, g, [&](std::size_t) { return cfg.pose_rate; });
      std::size_t p = 0;
      for (std::size_t n = 1; n < scene.nodes.size(); ++n) {
        for (auto& pose : scene.nodes[n].poses) {
          pose.translation = Vec3(x[p], x[p + 1], x[p + 2]);
          p += 3;
        }
      }
    }

    TrainLogEntry entry{it, t, loss.breakdown, scene.primitive_count()};
    result.log.entries.push_back(entry);

    const int done = it + 1;
    if (cfg.densify.due(done)) {
      const DensifyOutcome outcome = densify_and_prune(scene, stats, cfg.densify, extent, rng);
      optimizer.remap_rows(outcome.source_rows);
      stats.resize(scene.primitive_count());
      deform_opt.sync(scene, cfg.adam);
      result.log.densify_events.push_back(
          {done, outcome.split, outcome.cloned, outcome.removed(), scene.primitive_count()});
    }
    if (cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 && !cfg.checkpoint_path.empty()) {
      io::save_scene(cfg.checkpoint_path, scene);
    }
    if (callback && !callback(entry)) break;
  }
  return result;
}

}  // namespace hsplat
