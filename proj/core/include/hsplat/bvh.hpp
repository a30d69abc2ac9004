#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hsplat/gaussian.hpp"
#include "hsplat/types.hpp"

namespace hsplat {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return !(lo.array() <= hi.array()).all(); }
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool contains(const Aabb& b) const {
    return (lo.array() <= b.lo.array()).all() && (b.hi.array() <= hi.array()).all();
  }
  Vec3 centroid() const { return 0.5 * (lo + hi); }
  double surface_area() const;

  /// Slab test against [t_min, t_max]. `inv_dir` is 1 / direction componentwise.
  bool intersect(const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) const;
};

struct ProxyTriangle {
  std::array<Vec3, 3> v;
  std::uint32_t primitive = 0;

  Aabb bounds() const;
};

/// Two triangles per primitive spanning the square [-h, h]^2 in scaled
/// tangent coordinates (h = half_width), in primitive order.
std::vector<ProxyTriangle> make_proxy_geometry(std::span<const Gaussian2D> prims,
                                               double half_width = 3.0);

/// Moller-Trumbore with barycentric slack `eps`. Returns the ray parameter
/// when it lies in [t_min, t_max]; parallel rays miss.
std::optional<double> intersect_triangle(const Ray& ray, const ProxyTriangle& tri, double t_min,
                                         double t_max, double eps = 1e-9);

class Bvh {
 public:
  static constexpr int kMaxLeafSize = 4;
  static constexpr int kMaxDepth = 64;

  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first slot in triangle_order; inner: right child
    std::uint32_t count = 0;  // > 0 for leaves
    bool leaf() const { return count > 0; }
  };

  Bvh() = default;

  /// Binned SAH splits; falls back to a median split on the longest centroid
  /// axis when SAH finds no useful partition. Deterministic.
  static Bvh build(std::span<const ProxyTriangle> tris);

  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Triangle indices in leaf order.
  const std::vector<std::uint32_t>& triangle_order() const { return order_; }
  int height() const { return height_; }

  /// Throws ContractViolation when a structural invariant is broken.
  void validate(std::span<const ProxyTriangle> tris) const;

  /// Visits every leaf triangle whose leaf box overlaps the ray segment
  /// [t_min, limit()]. limit is re-read before each node so callers can
  /// shrink it while traversing. Near child first.
  template <class OnTriangle, class Limit>
  void traverse(const Ray& ray, double t_min, OnTriangle&& on_triangle, Limit&& limit) const;

  /// Sorted indices of all triangles hit with t in [t_min, t_max].
  std::vector<std::uint32_t> intersect_all(const Ray& ray, std::span<const ProxyTriangle> tris,
                                           double t_min, double t_max) const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  int height_ = 0;
};

template <class OnTriangle, class Limit>
void Bvh::traverse(const Ray& ray, double t_min, OnTriangle&& on_triangle, Limit&& limit) const {
  if (nodes_.empty()) return;
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  std::array<std::uint32_t, 2 * kMaxDepth + 2> stack;
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!node.box.intersect(ray.origin, inv_dir, t_min, limit())) continue;
    if (node.leaf()) {
      for (std::uint32_t i = 0; i < node.count; ++i) on_triangle(order_[node.first + i]);
      continue;
    }
    const std::uint32_t self = static_cast<std::uint32_t>(&node - nodes_.data());
    std::uint32_t near = self + 1;
    std::uint32_t far = node.first;
    const Vec3 c_near = nodes_[near].box.centroid() - ray.origin;
    const Vec3 c_far = nodes_[far].box.centroid() - ray.origin;
    if (c_far.dot(ray.direction) < c_near.dot(ray.direction)) std::swap(near, far);
    stack[top++] = far;
    stack[top++] = near;
  }
}

}  // namespace hsplat
