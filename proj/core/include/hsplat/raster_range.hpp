#pragma once

#include <span>

#include "hsplat/gaussian.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/rasterizer.hpp"

namespace hsplat {

/// Range image approximated with pinhole rasterization: the sweep is covered
/// by `faces` cameras at the sensor origin, and each LiDAR cell reads the
/// nearest pixel of the face containing its direction. Camera z is converted
/// to a distance along the LiDAR ray. Only depth and alpha are filled.
RangeImage rasterize_range_image(std::span<const Gaussian2D> prims, const LidarModel& lidar, double t,
                                 int faces = 4, double pixels_per_column = 1.0,
                                 const RasterSettings& settings = {});

}  // namespace hsplat
