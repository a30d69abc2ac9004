#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsplat/image.hpp"
#include "hsplat/types.hpp"

namespace hsplat {

/// Mean nearest-neighbour distance from a to b plus the same from b to a.
/// Throws EmptyInput when either set is empty.
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);

struct FScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// precision: share of `predicted` within tau of `reference`; recall: the reverse.
FScore f_score(std::span<const Vec3> predicted, std::span<const Vec3> reference, double tau = 0.05);

struct ErrorStats {
  double rmse = 0.0;
  double medae = 0.0;  // lower-middle element for even counts
  std::size_t count = 0;
};

/// Over entries whose mask byte is non-zero (all entries when mask is empty).
/// Throws ShapeMismatch or EmptyInput.
ErrorStats error_stats(std::span<const double> x, std::span<const double> y,
                       std::span<const std::uint8_t> mask = {});

struct Psnr {
  double db = 0.0;
  bool infinite = false;
};

Psnr psnr(const Image& x, const Image& y, double peak = 1.0);
Psnr psnr_from_mse(double mse, double peak = 1.0);

/// Metric values with per-metric presence. Only computed metrics are set.
struct MetricReport {
  std::optional<double> cd;
  std::optional<double> f_score;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> depth_rmse;
  std::optional<double> depth_medae;
  std::optional<double> intensity_rmse;
  std::optional<double> intensity_medae;
  std::optional<double> ssim;
  std::optional<Psnr> psnr;
  std::size_t predicted_points = 0;
  std::size_t reference_points = 0;
};

}  // namespace hsplat
