#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hsplat/adam.hpp"
#include "hsplat/camera.hpp"
#include "hsplat/densify.hpp"
#include "hsplat/image.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/loss.hpp"
#include "hsplat/rasterizer.hpp"
#include "hsplat/raytracer.hpp"
#include "hsplat/scene_graph.hpp"

namespace hsplat {

struct CameraFrame {
  double timestamp = 0.0;
  CameraModel camera;
  Image color;  // 3 channels in [0, 1]
};

/// One LiDAR sweep; `lidar.poses` must cover `timestamp`.
struct LidarFrame {
  double timestamp = 0.0;
  LidarModel lidar;
  RangeImage target;
};

struct Dataset {
  std::vector<CameraFrame> cameras;
  std::vector<LidarFrame> lidars;

  bool empty() const { return cameras.empty() && lidars.empty(); }
};

struct TrainConfig {
  int iterations = 30000;
  std::uint64_t seed = 0;
  LossWeights weights;
  LearningRates rates;
  AdamSettings adam;
  DensifySettings densify;
  RasterSettings raster;
  TraceSettings trace;
  SsimSettings ssim;
  double scene_extent = 0.0;  // <= 0: half diagonal of the initial primitive bounds
  bool use_camera = true;
  bool use_lidar = true;
  /// Translation-only refinement of movable node poses. Off by default.
  bool optimize_poses = false;
  double pose_rate = 1e-3;
  bool optimize_deform = true;
  int checkpoint_interval = 0;  // 0 disables checkpoints
  std::filesystem::path checkpoint_path;
};

struct TrainLogEntry {
  int iteration = 0;
  double timestamp = 0.0;
  LossBreakdown loss;
  std::size_t primitives = 0;
};

struct DensifyEvent {
  int iteration = 0;
  std::size_t split = 0;
  std::size_t cloned = 0;
  std::size_t removed = 0;
  std::size_t primitives_after = 0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  std::vector<DensifyEvent> densify_events;

  /// One line per iteration, fixed formatting (%.17g); stable across runs.
  std::string to_text() const;
};

struct FitResult {
  SceneGraph scene;
  TrainLog log;
};

/// Called after every iteration; return false to stop early.
using FitCallback = std::function<bool(const TrainLogEntry&)>;

/// Each iteration draws one timestamp group (seeded), renders one camera of
/// that group and all its LiDAR sweeps, and takes one optimizer step.
/// Throws EmptyInput for an empty dataset and NonFinite (naming the iteration)
/// when the loss stops being finite.
FitResult fit(const SceneGraph& initial, const Dataset& data, const TrainConfig& config,
              const FitCallback& callback = {});

/// Half diagonal of the bounding box of all canonical primitive centers.
double scene_extent(const SceneGraph& graph);

}  // namespace hsplat
