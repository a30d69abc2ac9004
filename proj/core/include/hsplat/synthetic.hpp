#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsplat/bvh.hpp"
#include "hsplat/camera.hpp"
#include "hsplat/image.hpp"
#include "hsplat/io/manifest.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/scene_graph.hpp"
#include "hsplat/trainer.hpp"

namespace hsplat {

struct SyntheticOptions {
  std::string recipe = "textured-plane";
  std::uint64_t seed = 0;
  int camera_width = 480;
  int camera_height = 320;
  int lidar_channels = 32;
  int lidar_cols = 512;
  int train_views = 8;
  int test_views = 3;
  double spacing = 0.0;  // splat grid spacing in meters; <= 0 uses the recipe default
};

struct SyntheticView {
  double timestamp = 0.0;
  std::string split;
  CameraModel camera;
  Image color;
  std::vector<double> depth;
  std::vector<double> alpha;
};

struct SyntheticSweep {
  double timestamp = 0.0;
  std::string split;
  LidarModel lidar;
  RangeImage range;
};

struct SyntheticData {
  std::string recipe;
  SceneGraph scene;
  std::vector<SyntheticView> views;
  std::vector<SyntheticSweep> sweeps;

  /// Observations of one split ("train", "test" or "all").
  Dataset dataset(const std::string& split) const;
};

/// textured-plane, box-room, moving-box, walker.
const std::vector<std::string>& synthetic_recipes();

/// Ground-truth scene plus rendered camera images and range images along a
/// scripted sensor trajectory. Deterministic per options. Throws UnknownRecipe.
SyntheticData generate_synthetic(const SyntheticOptions& options);

/// Only the ground-truth scene of a recipe (no rendering).
SceneGraph synthetic_scene(const SyntheticOptions& options);

/// Writes scene.hsplat, manifest.txt and the image files under `dir`
/// (guarded by a directory lock). Returns the manifest as written.
io::DatasetManifest write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

/// World bounding box of the primitive centers of one node at time t.
Aabb node_world_bounds(const SceneGraph& graph, std::size_t node, double t);

}  // namespace hsplat
