#pragma once

#include <span>
#include <vector>

#include "hsplat/gaussian.hpp"
#include "hsplat/random.hpp"
#include "hsplat/scene_graph.hpp"

namespace hsplat {

struct InitOptions {
  ShDegrees degrees;
  std::size_t max_points = 0;      // 0 keeps every point; otherwise a seeded subsample
  std::uint64_t seed = 0;
  double scale_multiplier = 1.0;
  double default_scale = 0.01;     // used when there are no neighbours
  double raydrop_probability = 0.05;
  int frame_neighbors = 8;         // neighbours used for the tangent-plane fit
};

/// One primitive per (subsampled) point. Both scales are the mean distance to
/// the three nearest neighbours; the tangent frame spans the plane of a local
/// principal-component fit (identity frame for fewer than three neighbours).
/// Opacity logit 0; degree-0 color / intensity coefficients reproduce the
/// given values, higher orders are zero. colors and intensities may be empty.
/// Throws EmptyInput for no points, ShapeMismatch for attribute length mismatches.
std::vector<Gaussian2D> init_from_points(std::span<const Vec3> points, std::span<const Vec3> colors,
                                         std::span<const double> intensities, const InitOptions& options = {});

/// Copy of `graph` with every canonical center moved by an isotropic normal
/// offset of standard deviation `sigma` (seeded). Other parameters are kept.
SceneGraph jitter_centers(const SceneGraph& graph, double sigma, std::uint64_t seed);

}  // namespace hsplat
