#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hsplat/lidar.hpp"
#include "hsplat/rasterizer.hpp"

namespace hsplat::io {

/// Named float32 planes on a rows x cols grid. On disk: a 64-byte ASCII
/// header "HSPLIMG1 rows=<r> cols=<c> planes=<a,b,...>" padded with spaces
/// and ending in '\n', then each plane row-major as little-endian float32.
struct PlanarImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> names;
  std::vector<std::vector<float>> planes;

  const std::vector<float>& plane(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_planar(const PlanarImage& img);
PlanarImage parse_planar(std::span<const std::uint8_t> bytes);

void save_planar(const std::filesystem::path& path, const PlanarImage& img);
PlanarImage load_planar(const std::filesystem::path& path);

/// Planes D, I, R, A.
PlanarImage range_image_planes(const RangeImage& ri);
/// Requires planes D, I, R, A.
RangeImage range_image_from_planes(const PlanarImage& img);

/// Camera depth planes D (expected z) and A (alpha).
PlanarImage camera_depth_planes(const FrameBuffer& fb);

}  // namespace hsplat::io
