#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hsplat/camera.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/trainer.hpp"

namespace hsplat::io {

struct CameraEntry {
  double timestamp = 0.0;
  std::string split = "train";  // train | test
  CameraModel camera;
  std::filesystem::path image;  // PNG color
  std::filesystem::path depth;  // planar D, A (optional)
};

/// `lidar.poses` holds the single sweep pose at `timestamp`.
struct LidarEntry {
  double timestamp = 0.0;
  std::string split = "train";
  LidarModel lidar;
  std::filesystem::path range;  // planar D, I, R, A
};

/// Text manifest, one entry per line (format in docs/formats.md). Relative
/// paths are resolved against the manifest directory on load.
struct DatasetManifest {
  std::vector<CameraEntry> cameras;
  std::vector<LidarEntry> lidars;

  /// Throws ContractViolation unless each list is sorted by timestamp.
  void validate() const;
};

std::string format_manifest(const DatasetManifest& m);
/// `base` resolves relative paths. Throws Format with the line number.
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loads the images and range images of one split ("train", "test" or "all").
Dataset load_dataset(const DatasetManifest& m, const std::string& split);

}  // namespace hsplat::io
