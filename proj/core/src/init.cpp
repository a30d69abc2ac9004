#include "hsplat/init.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsplat/error.hpp"
#include "hsplat/spatial.hpp"

namespace hsplat {

std::vector<Gaussian2D> init_from_points(std::span<const Vec3> points, std::span<const Vec3> colors,
                                         std::span<const double> intensities, const InitOptions& options) {
  require(!points.empty(), ErrorCode::EmptyInput, "init_from_points: no points");
  require(colors.empty() || colors.size() == points.size(), ErrorCode::ShapeMismatch,
          "init_from_points: color count differs from point count");
  require(intensities.empty() || intensities.size() == points.size(), ErrorCode::ShapeMismatch,
          "init_from_points: intensity count differs from point count");

  std::vector<std::size_t> pick(points.size());
  std::iota(pick.begin(), pick.end(), 0);
  if (options.max_points > 0 && options.max_points < points.size()) {
    Rng rng(options.seed);
    // Partial Fisher-Yates, then restore input order.
    for (std::size_t i = 0; i < options.max_points; ++i) {
      std::swap(pick[i], pick[i + uniform_index(rng, pick.size() - i)]);
    }
    pick.resize(options.max_points);
    std::sort(pick.begin(), pick.end());
  }
  std::vector<Vec3> kept;
  kept.reserve(pick.size());
  for (std::size_t i : pick) kept.push_back(points[i]);
  const VoxelGrid grid(kept);

  const std::size_t want = static_cast<std::size_t>(std::max(3, options.frame_neighbors)) + 1;
  std::vector<Gaussian2D> out;
  out.reserve(kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j) {
    Gaussian2D g = Gaussian2D::zeros(options.degrees);
    g.center = kept[j];
    const auto nn = grid.k_nearest(kept[j], want);  // includes the point itself
    double scale = options.default_scale;
    if (nn.size() > 1) {
      const std::size_t k = std::min<std::size_t>(3, nn.size() - 1);
      double sum = 0.0;
      for (std::size_t m = 1; m <= k; ++m) sum += nn[m].distance;
      if (sum > 0.0) scale = sum / static_cast<double>(k);
    }
    scale *= options.scale_multiplier;
    g.log_scale_u = g.log_scale_v = std::log(scale);

    if (nn.size() >= 4) {
      Vec3 mean = Vec3::Zero();
      for (const auto& n : nn) mean += kept[n.index];
      mean /= static_cast<double>(nn.size());
      Mat3 cov = Mat3::Zero();
      for (const auto& n : nn) {
        const Vec3 d = kept[n.index] - mean;
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      if (eig.info() == Eigen::Success && eig.eigenvalues()(2) > 0.0) {
        g.tangent_u = eig.eigenvectors().col(2).normalized();
        g.tangent_v = eig.eigenvectors().col(1);
        orthonormalize_tangents(g);
      }
    }

    const std::size_t src = pick[j];
    const Vec3 color = colors.empty() ? Vec3::Constant(0.5) : colors[src];
    for (int c = 0; c < 3; ++c) g.sh_color.at(c, 0) = (std::clamp(color[c], 0.0, 1.0) - 0.5) / kShC0;
    const double intensity = intensities.empty() ? 0.5 : intensities[src];
    const double eps = 1e-4;
    g.sh_intensity.at(0, 0) = logit(std::clamp(intensity, eps, 1.0 - eps)) / kShC0;
    g.sh_raydrop.at(0, 0) = logit(options.raydrop_probability) / kShC0;
    out.push_back(std::move(g));
  }
  return out;
}

SceneGraph jitter_centers(const SceneGraph& graph, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "jitter sigma must be finite and >= 0");
  SceneGraph out = graph;
  Rng rng(seed);
  for (SceneNode& node : out.nodes) {
    for (Gaussian2D& g : node.primitives) {
      for (int a = 0; a < 3; ++a) g.center[a] += sigma * standard_normal(rng);
    }
  }
  return out;
}

}  // namespace hsplat
