#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hsplat/types.hpp"

namespace hsplat {

/// Uniform hash grid over a fixed point set with exact nearest-neighbour
/// queries (ring search that stops once no unvisited cell can be closer).
class VoxelGrid {
 public:
  struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
  };

  /// cell <= 0 picks a size from the point density.
  explicit VoxelGrid(std::span<const Vec3> points, double cell = 0.0);

  double cell() const { return cell_; }
  std::size_t size() const { return points_.size(); }

  /// Closest point; ties go to the lower index. Empty for an empty set.
  std::optional<Neighbor> nearest(const Vec3& q) const;

  /// Up to k closest points sorted by (distance, index).
  std::vector<Neighbor> k_nearest(const Vec3& q, std::size_t k) const;

  bool any_within(const Vec3& q, double radius) const;

  /// Cell size with roughly a couple of points per occupied cell.
  static double suggest_cell(std::span<const Vec3> points);

 private:
  using Key = std::array<std::int64_t, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  Key key_of(const Vec3& p) const;
  template <class Visit>
  void visit_ring(const Key& c, std::int64_t r, Visit&& visit) const;
  std::int64_t max_ring(const Key& c) const;

  std::span<const Vec3> points_;
  double cell_ = 1.0;
  Key lo_{}, hi_{};
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> cells_;
};

}  // namespace hsplat
