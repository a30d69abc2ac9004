#include "oracles.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hsplat::oracle {
namespace {

struct Hit {
  double t;
  double u;
  double v;
};

// Solves center + u * axis_u + v * axis_v = origin + t * dir.
bool solve(const Vec3& center, const Vec3& axis_u, const Vec3& axis_v, const Vec3& origin, const Vec3& dir, Hit& hit) {
  Mat3 m;
  m.col(0) = axis_u;
  m.col(1) = axis_v;
  m.col(2) = -dir;
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-12 * axis_u.norm() * axis_v.norm() * dir.norm())) return false;
  const Vec3 x = m.partialPivLu().solve(origin - center);
  hit = {x.z(), x.x(), x.y()};
  return true;
}

}  // namespace

FrameBuffer rasterize(std::span<const Gaussian2D> prims, const CameraModel& cam, const RasterSettings& s) {
  FrameBuffer fb(cam.width, cam.height);
  const Mat3& rot = cam.world_to_camera.rotation;
  const Vec3 eye = cam.center_world();

  std::vector<std::size_t> order(prims.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> center_z(prims.size());
  for (std::size_t i = 0; i < prims.size(); ++i) center_z[i] = cam.world_to_camera.apply(prims[i].center).z();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return center_z[a] < center_z[b]; });

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      // Camera-frame direction with unit z, so the ray parameter is camera depth.
      const Vec3 dir_cam((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      const Vec3 dir = rot.transpose() * dir_cam;
      double trans = 1.0, depth = 0.0;
      Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
      int count = 0;
      for (std::size_t i : order) {
        const Gaussian2D& g = prims[i];
        const ActivatedParams act = activate(g);
        Hit h;
        if (!solve(g.center, act.scale_u * g.tangent_u, act.scale_v * g.tangent_v, eye, dir, h)) continue;
        if (!(h.t > s.near_plane)) continue;
        const double r2 = h.u * h.u + h.v * h.v;
        if (r2 > s.cutoff_sigma * s.cutoff_sigma) continue;
        const double a = act.opacity * std::exp(-0.5 * r2);
        if (a < s.min_contribution) continue;
        const Vec3 view = (g.center - eye).normalized();
        const Vec3 c = eval_color(g.sh_color, view);
        Vec3 n = rot * (g.tangent_u.cross(g.tangent_v)).normalized();
        if (n.dot(cam.world_to_camera.apply(g.center)) > 0.0) n = -n;
        const double w = a * trans;
        color += w * c;
        depth += w * h.t;
        normal += w * n;
        ++count;
        trans *= 1.0 - a;
        if (trans < s.termination_transmittance) break;
      }
      color += trans * s.background;
      const std::size_t p = fb.index(x, y);
      for (int k = 0; k < 3; ++k) {
        fb.color[3 * p + k] = color[k];
        fb.normal[3 * p + k] = normal[k];
      }
      fb.depth[p] = depth;
      fb.alpha[p] = 1.0 - trans;
      fb.count[p] = count;
    }
  }
  return fb;
}

RangeImage trace(std::span<const Gaussian2D> prims, const RayBundle& rays, const TraceSettings& s) {
  RangeImage out(rays.rows, rays.cols);
  struct Sorted {
    double t;
    std::size_t id;
    double u, v;
  };
  std::vector<Sorted> hits;
  for (std::size_t r = 0; r < rays.rays.size(); ++r) {
    const Ray& ray = rays.rays[r];
    hits.clear();
    for (std::size_t i = 0; i < prims.size(); ++i) {
      const ActivatedParams act = activate(prims[i]);
      Hit h;
      if (!solve(prims[i].center, act.scale_u * prims[i].tangent_u, act.scale_v * prims[i].tangent_v, ray.origin,
                 ray.direction, h)) {
        continue;
      }
      if (!(h.t > s.min_distance) || h.t > rays.max_range) continue;
      if (h.u * h.u + h.v * h.v > s.cutoff_sigma * s.cutoff_sigma) continue;
      hits.push_back({h.t, i, h.u, h.v});
    }
    std::sort(hits.begin(), hits.end(), [](const Sorted& a, const Sorted& b) {
      return a.t < b.t || (a.t == b.t && a.id < b.id);
    });
    double trans = 1.0, d = 0.0, in = 0.0, rd = 0.0;
    for (const Sorted& h : hits) {
      const Gaussian2D& g = prims[h.id];
      const double a = activate(g).opacity * std::exp(-0.5 * (h.u * h.u + h.v * h.v));
      if (a < s.min_contribution) continue;
      const double w = a * trans;
      d += w * h.t;
      in += w * eval_intensity(g.sh_intensity, ray.direction);
      rd += w * eval_raydrop(g.sh_raydrop, ray.direction);
      trans *= 1.0 - a;
      if (trans < s.termination_transmittance) break;
    }
    out.depth[r] = d;
    out.intensity[r] = in;
    out.raydrop[r] = rd;
    out.alpha[r] = 1.0 - trans;
  }
  return out;
}

Nearest nearest(std::span<const Vec3> points, const Vec3& q) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = (points[i] - q).norm();
    if (d < best.distance) best = {i, d};
  }
  return best;
}

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  double ab = 0.0, ba = 0.0;
  for (const Vec3& p : a) ab += nearest(b, p).distance;
  for (const Vec3& p : b) ba += nearest(a, p).distance;
  return ab / static_cast<double>(a.size()) + ba / static_cast<double>(b.size());
}

double ssim(const Image& x, const Image& y, const SsimSettings& s) {
  const int half = s.window / 2;
  std::vector<double> w1(s.window);
  for (int k = 0; k < s.window; ++k) {
    const double d = k - half;
    w1[k] = std::exp(-d * d / (2.0 * s.sigma * s.sigma));
  }
  const double c1 = std::pow(s.k1 * s.dynamic_range, 2);
  const double c2 = std::pow(s.k2 * s.dynamic_range, 2);
  double total = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    for (int py = 0; py < x.height; ++py) {
      for (int px = 0; px < x.width; ++px) {
        double wsum = 0.0, mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
        for (int dy = -half; dy <= half; ++dy) {
          for (int dx = -half; dx <= half; ++dx) {
            const int qx = px + dx, qy = py + dy;
            if (qx < 0 || qy < 0 || qx >= x.width || qy >= x.height) continue;
            const double w = w1[dx + half] * w1[dy + half];
            const double a = x.at(qx, qy, c), b = y.at(qx, qy, c);
            wsum += w;
            mx += w * a;
            my += w * b;
            xx += w * a * a;
            yy += w * b * b;
            xy += w * a * b;
          }
        }
        mx /= wsum;
        my /= wsum;
        const double vx = xx / wsum - mx * mx;
        const double vy = yy / wsum - my * my;
        const double cxy = xy / wsum - mx * my;
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    }
  }
  return total / (static_cast<double>(x.pixels()) * x.channels);
}

double central_difference(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                          std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

}  // namespace hsplat::oracle
