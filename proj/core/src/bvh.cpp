#include "hsplat/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsplat/error.hpp"

namespace hsplat {

double Aabb::surface_area() const {
  if (empty()) return 0.0;
  const Vec3 e = hi - lo;
  return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
}

bool Aabb::intersect(const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) const {
  double enter = t_min;
  double exit = t_max;
  for (int a = 0; a < 3; ++a) {
    if (std::isinf(inv_dir[a])) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return false;
      continue;
    }
    double t0 = (lo[a] - origin[a]) * inv_dir[a];
    double t1 = (hi[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    exit = std::min(exit, t1);
  }
  // Slack for rounding on flat boxes and for hits computed by another formula.
  return enter <= exit + 1e-9 * (std::abs(exit) + std::abs(enter) + 1.0);
}

Aabb ProxyTriangle::bounds() const {
  Aabb b;
  for (const Vec3& p : v) b.expand(p);
  return b;
}

std::vector<ProxyTriangle> make_proxy_geometry(std::span<const Gaussian2D> prims, double half_width) {
  std::vector<ProxyTriangle> out;
  out.reserve(prims.size() * 2);
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const Gaussian2D& g = prims[i];
    const ActivatedParams act = activate(g);
    const Vec3 a = half_width * act.scale_u * g.tangent_u;
    const Vec3 b = half_width * act.scale_v * g.tangent_v;
    const Vec3 c00 = g.center - a - b;
    const Vec3 c10 = g.center + a - b;
    const Vec3 c11 = g.center + a + b;
    const Vec3 c01 = g.center - a + b;
    const auto id = static_cast<std::uint32_t>(i);
    out.push_back({{c00, c10, c11}, id});
    out.push_back({{c00, c11, c01}, id});
  }
  return out;
}

std::optional<double> intersect_triangle(const Ray& ray, const ProxyTriangle& tri, double t_min,
                                         double t_max, double eps) {
  const Vec3 e1 = tri.v[1] - tri.v[0];
  const Vec3 e2 = tri.v[2] - tri.v[0];
  const Vec3 p = ray.direction.cross(e2);
  const double det = e1.dot(p);
  if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - tri.v[0];
  const double b1 = s.dot(p) * inv;
  if (b1 < -eps || b1 > 1.0 + eps) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double b2 = ray.direction.dot(q) * inv;
  if (b2 < -eps || b1 + b2 > 1.0 + eps) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t < t_min || t > t_max) return std::nullopt;
  return t;
}

namespace {

constexpr int kBins = 16;
constexpr int kForceMedianDepth = 40;

struct Builder {
  std::span<const ProxyTriangle> tris;
  std::vector<Aabb> boxes;
  std::vector<Vec3> centroids;
  std::vector<std::uint32_t>& order;
  std::vector<Bvh::Node>& nodes;
  int height = 0;

  int bin_of(double c, double lo, double extent) const {
    int b = static_cast<int>(kBins * (c - lo) / extent);
    return std::clamp(b, 0, kBins - 1);
  }

  std::uint32_t build(std::size_t begin, std::size_t end, int depth) {
    height = std::max(height, depth + 1);
    const auto index = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    Aabb box;
    Aabb cbox;
    for (std::size_t i = begin; i < end; ++i) {
      box.expand(boxes[order[i]]);
      cbox.expand(centroids[order[i]]);
    }
    nodes[index].box = box;
    const std::size_t n = end - begin;
    if (n <= static_cast<std::size_t>(Bvh::kMaxLeafSize)) {
      nodes[index].first = static_cast<std::uint32_t>(begin);
      nodes[index].count = static_cast<std::uint32_t>(n);
      return index;
    }

    std::size_t mid = begin;
    if (depth < kForceMedianDepth) mid = sah_split(begin, end, cbox);
    if (mid == begin || mid == end) mid = median_split(begin, end, cbox);

    build(begin, mid, depth + 1);
    const std::uint32_t right = build(mid, end, depth + 1);
    nodes[index].first = right;
    nodes[index].count = 0;
    return index;
  }

  // Returns begin when no split beats the others.
  std::size_t sah_split(std::size_t begin, std::size_t end, const Aabb& cbox) {
    double best_cost = std::numeric_limits<double>::infinity();
    int best_axis = -1;
    int best_bin = -1;
    for (int axis = 0; axis < 3; ++axis) {
      const double extent = cbox.hi[axis] - cbox.lo[axis];
      if (!(extent > 0.0)) continue;
      std::array<Aabb, kBins> bin_box;
      std::array<std::size_t, kBins> bin_count{};
      for (std::size_t i = begin; i < end; ++i) {
        const int b = bin_of(centroids[order[i]][axis], cbox.lo[axis], extent);
        bin_box[b].expand(boxes[order[i]]);
        ++bin_count[b];
      }
      std::array<double, kBins> right_area{};
      std::array<std::size_t, kBins> right_count{};
      Aabb acc;
      std::size_t cnt = 0;
      for (int b = kBins - 1; b > 0; --b) {
        acc.expand(bin_box[b]);
        cnt += bin_count[b];
        right_area[b] = acc.surface_area();
        right_count[b] = cnt;
      }
      acc = Aabb{};
      cnt = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        acc.expand(bin_box[b]);
        cnt += bin_count[b];
        if (cnt == 0 || right_count[b + 1] == 0) continue;
        const double cost = acc.surface_area() * static_cast<double>(cnt) +
                            right_area[b + 1] * static_cast<double>(right_count[b + 1]);
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_bin = b;
        }
      }
    }
    if (best_axis < 0) return begin;
    const double lo = cbox.lo[best_axis];
    const double extent = cbox.hi[best_axis] - lo;
    auto it = std::stable_partition(order.begin() + begin, order.begin() + end, [&](std::uint32_t t) {
      return bin_of(centroids[t][best_axis], lo, extent) <= best_bin;
    });
    return static_cast<std::size_t>(it - order.begin());
  }

  std::size_t median_split(std::size_t begin, std::size_t end, const Aabb& cbox) {
    const Vec3 e = cbox.hi - cbox.lo;
    int axis = 0;
    if (e.y() > e[axis]) axis = 1;
    if (e.z() > e[axis]) axis = 2;
    std::sort(order.begin() + begin, order.begin() + end, [&](std::uint32_t a, std::uint32_t b) {
      if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
      return a < b;
    });
    return begin + (end - begin) / 2;
  }
};

}  // namespace

Bvh Bvh::build(std::span<const ProxyTriangle> tris) {
  Bvh bvh;
  if (tris.empty()) return bvh;
  bvh.order_.resize(tris.size());
  std::iota(bvh.order_.begin(), bvh.order_.end(), 0u);
  Builder b{tris, {}, {}, bvh.order_, bvh.nodes_};
  b.boxes.reserve(tris.size());
  b.centroids.reserve(tris.size());
  for (const ProxyTriangle& t : tris) {
    b.boxes.push_back(t.bounds());
    b.centroids.push_back((t.v[0] + t.v[1] + t.v[2]) / 3.0);
  }
  bvh.nodes_.reserve(2 * tris.size() / kMaxLeafSize + 1);
  b.build(0, tris.size(), 0);
  bvh.height_ = b.height;
  return bvh;
}

void Bvh::validate(std::span<const ProxyTriangle> tris) const {
  if (nodes_.empty()) {
    require(tris.empty(), ErrorCode::ContractViolation, "empty bvh over non-empty triangle set");
    return;
  }
  require(height_ <= kMaxDepth, ErrorCode::ContractViolation, "bvh taller than 64");
  require(order_.size() == tris.size(), ErrorCode::ContractViolation, "bvh triangle count mismatch");
  std::vector<int> seen(tris.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.leaf()) {
      require(n.count <= static_cast<std::uint32_t>(kMaxLeafSize), ErrorCode::ContractViolation,
              "bvh leaf too large");
      for (std::uint32_t k = 0; k < n.count; ++k) {
        const std::uint32_t t = order_.at(n.first + k);
        ++seen.at(t);
        require(n.box.contains(tris[t].bounds()), ErrorCode::ContractViolation,
                "bvh leaf box does not contain its triangle");
      }
    } else {
      require(i + 1 < nodes_.size() && n.first < nodes_.size() && n.first > i + 1,
              ErrorCode::ContractViolation, "bvh child index out of range");
      require(n.box.contains(nodes_[i + 1].box) && n.box.contains(nodes_[n.first].box),
              ErrorCode::ContractViolation, "bvh child box escapes its parent");
    }
  }
  for (int s : seen) {
    require(s == 1, ErrorCode::ContractViolation, "bvh triangle not in exactly one leaf");
  }
}

std::vector<std::uint32_t> Bvh::intersect_all(const Ray& ray, std::span<const ProxyTriangle> tris,
                                              double t_min, double t_max) const {
  std::vector<std::uint32_t> hits;
  traverse(
      ray, t_min,
      [&](std::uint32_t t) {
        if (intersect_triangle(ray, tris[t], t_min, t_max)) hits.push_back(t);
      },
      [&] { return t_max; });
  std::sort(hits.begin(), hits.end());
  return hits;
}

}  // namespace hsplat
