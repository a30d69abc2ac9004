#include "hsplat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsplat/error.hpp"
#include "hsplat/parallel.hpp"
#include "hsplat/spatial.hpp"

namespace hsplat {
namespace {

constexpr std::size_t kPointsPerChunk = 1024;

double mean_nearest(std::span<const Vec3> from, const VoxelGrid& to) {
  const std::size_t chunks = (from.size() + kPointsPerChunk - 1) / kPointsPerChunk;
  std::vector<double> dist(from.size());
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(from.size(), (c + 1) * kPointsPerChunk);
    for (std::size_t i = c * kPointsPerChunk; i < end; ++i) dist[i] = to.nearest(from[i])->distance;
  });
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / static_cast<double>(from.size());
}

double share_within(std::span<const Vec3> from, const VoxelGrid& to, double tau) {
  std::size_t hits = 0;
  for (const Vec3& p : from) hits += to.any_within(p, tau) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  require(!a.empty() && !b.empty(), ErrorCode::EmptyInput, "chamfer distance needs two non-empty sets");
  const VoxelGrid grid_a(a), grid_b(b);
  return mean_nearest(a, grid_b) + mean_nearest(b, grid_a);
}

FScore f_score(std::span<const Vec3> predicted, std::span<const Vec3> reference, double tau) {
  require(!predicted.empty() && !reference.empty(), ErrorCode::EmptyInput,
          "f-score needs two non-empty sets");
  require(tau >= 0.0, ErrorCode::InvalidArgument, "f-score threshold must be non-negative");
  const double cell = tau > 0.0 ? tau : 0.0;
  const VoxelGrid grid_p(predicted, cell), grid_r(reference, cell);
  FScore out;
  out.precision = share_within(predicted, grid_r, tau);
  out.recall = share_within(reference, grid_p, tau);
  const double s = out.precision + out.recall;
  out.f = s > 0.0 ? 2.0 * out.precision * out.recall / s : 0.0;
  return out;
}

ErrorStats error_stats(std::span<const double> x, std::span<const double> y,
                       std::span<const std::uint8_t> mask) {
  require(x.size() == y.size(), ErrorCode::ShapeMismatch, "error stats: sizes differ");
  require(mask.empty() || mask.size() == x.size(), ErrorCode::ShapeMismatch, "error stats: mask size differs");
  std::vector<double> err;
  err.reserve(x.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double e = std::abs(x[i] - y[i]);
    err.push_back(e);
    sq += e * e;
  }
  require(!err.empty(), ErrorCode::EmptyInput, "error stats: empty mask");
  ErrorStats out;
  out.count = err.size();
  out.rmse = std::sqrt(sq / static_cast<double>(err.size()));
  const std::size_t mid = (err.size() - 1) / 2;
  std::nth_element(err.begin(), err.begin() + static_cast<std::ptrdiff_t>(mid), err.end());
  out.medae = err[mid];
  return out;
}

Psnr psnr_from_mse(double mse, double peak) {
  require(mse >= 0.0, ErrorCode::InvalidArgument, "mse must be non-negative");
  if (mse == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(peak * peak / mse), false};
}

Psnr psnr(const Image& x, const Image& y, double peak) {
  require(x.same_shape(y), ErrorCode::ShapeMismatch, "psnr: image shapes differ");
  require(!x.data.empty(), ErrorCode::EmptyInput, "psnr: empty image");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = x.data[i] - y.data[i];
    sq += d * d;
  }
  return psnr_from_mse(sq / static_cast<double>(x.data.size()), peak);
}

}  // namespace hsplat
