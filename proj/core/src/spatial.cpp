#include "hsplat/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsplat/error.hpp"

namespace hsplat {

std::size_t VoxelGrid::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (std::int64_t v : k) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

double VoxelGrid::suggest_cell(std::span<const Vec3> points) {
  if (points.empty()) return 1.0;
  Vec3 lo = points.front(), hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) return 1.0;
  // Points on surfaces scale like n^(1/2) per axis, volumes like n^(1/3); the
  // square root keeps cells small enough for surface samples.
  const double c = 2.0 * extent / std::sqrt(static_cast<double>(points.size()));
  return std::max(c, extent * 1e-6);
}

VoxelGrid::VoxelGrid(std::span<const Vec3> points, double cell) : points_(points) {
  cell_ = cell > 0.0 ? cell : suggest_cell(points);
  require(std::isfinite(cell_) && cell_ > 0.0, ErrorCode::InvalidArgument, "voxel size must be positive");
  require(points.size() < std::numeric_limits<std::uint32_t>::max(), ErrorCode::InvalidArgument,
          "too many points for voxel grid");
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].allFinite(), ErrorCode::NonFinite, "non-finite point in voxel grid input");
    const Key k = key_of(points[i]);
    if (i == 0) {
      lo_ = hi_ = k;
    } else {
      for (int a = 0; a < 3; ++a) {
        lo_[a] = std::min(lo_[a], k[a]);
        hi_[a] = std::max(hi_[a], k[a]);
      }
    }
    cells_[k].push_back(static_cast<std::uint32_t>(i));
  }
}

VoxelGrid::Key VoxelGrid::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

std::int64_t VoxelGrid::max_ring(const Key& c) const {
  std::int64_t r = 0;
  for (int a = 0; a < 3; ++a) r = std::max({r, c[a] - lo_[a], hi_[a] - c[a]});
  return r;
}

template <class Visit>
void VoxelGrid::visit_ring(const Key& c, std::int64_t r, Visit&& visit) const {
  auto probe = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    if (x < lo_[0] || x > hi_[0] || y < lo_[1] || y > hi_[1] || z < lo_[2] || z > hi_[2]) return;
    auto it = cells_.find(Key{x, y, z});
    if (it == cells_.end()) return;
    for (std::uint32_t i : it->second) visit(i);
  };
  if (r == 0) {
    probe(c[0], c[1], c[2]);
    return;
  }
  for (std::int64_t dx = -r; dx <= r; ++dx) {
    for (std::int64_t dy = -r; dy <= r; ++dy) {
      const bool edge = std::abs(dx) == r || std::abs(dy) == r;
      if (edge) {
        for (std::int64_t dz = -r; dz <= r; ++dz) probe(c[0] + dx, c[1] + dy, c[2] + dz);
      } else {
        probe(c[0] + dx, c[1] + dy, c[2] - r);
        probe(c[0] + dx, c[1] + dy, c[2] + r);
      }
    }
  }
}

std::optional<VoxelGrid::Neighbor> VoxelGrid::nearest(const Vec3& q) const {
  auto found = k_nearest(q, 1);
  if (found.empty()) return std::nullopt;
  return found.front();
}

std::vector<VoxelGrid::Neighbor> VoxelGrid::k_nearest(const Vec3& q, std::size_t k) const {
  std::vector<Neighbor> best;
  if (points_.empty() || k == 0) return best;
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  const Key c = key_of(q);
  // Distance from q to the boundary of its own cell, per axis.
  const Vec3 rel = q / cell_ - Vec3(static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2]));
  const double inner = std::min({rel.x(), rel.y(), rel.z(), 1.0 - rel.x(), 1.0 - rel.y(), 1.0 - rel.z()});
  // Query cells outside the grid bounds reach the grid after this many rings.
  std::int64_t start = 0;
  for (int a = 0; a < 3; ++a) start = std::max({start, lo_[a] - c[a], c[a] - hi_[a]});
  const std::int64_t last = max_ring(c);
  for (std::int64_t r = start; r <= last; ++r) {
    visit_ring(c, r, [&](std::uint32_t i) {
      Neighbor n{i, (points_[i] - q).norm()};
      if (best.size() < k) {
        best.insert(std::upper_bound(best.begin(), best.end(), n, better), n);
      } else if (better(n, best.back())) {
        best.pop_back();
        best.insert(std::upper_bound(best.begin(), best.end(), n, better), n);
      }
    });
    // Anything in ring r+1 or beyond is at least (r + inner) cells away.
    if (best.size() == k && best.back().distance < (static_cast<double>(r) + std::max(inner, 0.0)) * cell_) break;
  }
  return best;
}

bool VoxelGrid::any_within(const Vec3& q, double radius) const {
  if (points_.empty() || !(radius >= 0.0)) return false;
  const Key c = key_of(q);
  const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_));
  const std::int64_t x0 = std::max(c[0] - reach, lo_[0]), x1 = std::min(c[0] + reach, hi_[0]);
  const std::int64_t y0 = std::max(c[1] - reach, lo_[1]), y1 = std::min(c[1] + reach, hi_[1]);
  const std::int64_t z0 = std::max(c[2] - reach, lo_[2]), z1 = std::min(c[2] + reach, hi_[2]);
  for (std::int64_t x = x0; x <= x1; ++x) {
    for (std::int64_t y = y0; y <= y1; ++y) {
      for (std::int64_t z = z0; z <= z1; ++z) {
        auto it = cells_.find(Key{x, y, z});
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) {
          if ((points_[i] - q).norm() <= radius) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace hsplat
