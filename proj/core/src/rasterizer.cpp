#include "hsplat/rasterizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "hsplat/error.hpp"
#include "hsplat/parallel.hpp"

namespace hsplat {
namespace {

struct ProjectedSplat {
  SplatScreenTransform transform;
  Vec3 color_raw;  // SH value before +0.5 / clamp
  Vec3 color;
  Vec3 normal_cam;
  double normal_sign = 1.0;
  double opacity = 0.0;
  double sort_depth = 0.0;
  Vec3 view_dir = Vec3::UnitZ();
  double view_dist = 0.0;
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive pixel bounds
  bool visible = false;
};

// Per-splat gradient on intermediate quantities, accumulated during backward.
struct SplatGrad {
  Eigen::Matrix3d transform = Eigen::Matrix3d::Zero();
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::Zero();

  SplatGrad& operator+=(const SplatGrad& o) {
    transform += o.transform;
    opacity += o.opacity;
    color += o.color;
    normal += o.normal;
    return *this;
  }
};

struct Contribution {
  std::uint32_t slot;  // position in the tile list
  double a;            // opacity * G
  double gauss;
  double u, v, z;
  double transmittance;  // before this splat
};

Eigen::Matrix<double, 3, 4> screen_rows(const Mat4& w) {
  Eigen::Matrix<double, 3, 4> p;
  p.row(0) = w.row(0);
  p.row(1) = w.row(1);
  p.row(2) = w.row(3);
  return p;
}

// Evaluates one splat against pixel (x, y) with the full contribution rules.
inline bool evaluate_pixel(const ProjectedSplat& sp, double x, double y, const RasterSettings& s,
                           double& u, double& v, double& z, double& gauss, double& a) {
  auto hit = intersect_splat_pixel(sp.transform, x, y, s.near_plane);
  if (!hit) return false;
  u = hit->local.u;
  v = hit->local.v;
  const double r2 = u * u + v * v;
  if (r2 > s.cutoff_sigma * s.cutoff_sigma) return false;
  gauss = std::exp(-0.5 * r2);
  a = sp.opacity * gauss;
  if (a < s.min_contribution) return false;
  z = hit->depth;
  return true;
}

}  // namespace

FrameBuffer::FrameBuffer(int w, int h)
    : width(w),
      height(h),
      color(3 * static_cast<std::size_t>(w) * h, 0.0),
      depth(static_cast<std::size_t>(w) * h, 0.0),
      alpha(static_cast<std::size_t>(w) * h, 0.0),
      normal(3 * static_cast<std::size_t>(w) * h, 0.0),
      count(static_cast<std::size_t>(w) * h, 0) {}

Vec3 FrameBuffer::color_at(int x, int y) const {
  std::size_t i = 3 * index(x, y);
  return {color[i], color[i + 1], color[i + 2]};
}

Vec3 FrameBuffer::normal_at(int x, int y) const {
  std::size_t i = 3 * index(x, y);
  return {normal[i], normal[i + 1], normal[i + 2]};
}

FrameBufferGrad::FrameBufferGrad(int w, int h)
    : width(w),
      height(h),
      color(3 * static_cast<std::size_t>(w) * h, 0.0),
      depth(static_cast<std::size_t>(w) * h, 0.0),
      alpha(static_cast<std::size_t>(w) * h, 0.0),
      normal(3 * static_cast<std::size_t>(w) * h, 0.0) {}

SplatScreenTransform splat_screen_transform(const Gaussian2D& g, const Mat4& world_to_screen) {
  const ActivatedParams act = activate(g);
  Eigen::Matrix<double, 4, 3> h = Eigen::Matrix<double, 4, 3>::Zero();
  h.block<3, 1>(0, 0) = act.scale_u * g.tangent_u;
  h.block<3, 1>(0, 1) = act.scale_v * g.tangent_v;
  h.block<3, 1>(0, 2) = g.center;
  h(3, 2) = 1.0;
  return screen_rows(world_to_screen) * h;
}

std::optional<SplatPixelHit> intersect_splat_pixel(const SplatScreenTransform& t, double x, double y,
                                                   double near_plane) {
  const double hx0 = t(0, 0) - x * t(2, 0);
  const double hx1 = t(0, 1) - x * t(2, 1);
  const double hx2 = t(0, 2) - x * t(2, 2);
  const double hy0 = t(1, 0) - y * t(2, 0);
  const double hy1 = t(1, 1) - y * t(2, 1);
  const double hy2 = t(1, 2) - y * t(2, 2);
  const double det = hx0 * hy1 - hx1 * hy0;
  const double scale = std::hypot(hx0, hx1) * std::hypot(hy0, hy1);
  if (!(std::abs(det) > 1e-12 * scale)) return std::nullopt;
  const double u = (hx1 * hy2 - hx2 * hy1) / det;
  const double v = (hx2 * hy0 - hx0 * hy2) / det;
  const double z = t(2, 0) * u + t(2, 1) * v + t(2, 2);
  if (!(z > near_plane)) return std::nullopt;
  return SplatPixelHit{{u, v}, z};
}

std::optional<SplatPixelHit> intersect_splat_pixel(const Gaussian2D& g, const CameraModel& cam,
                                                   double x, double y, double near_plane) {
  return intersect_splat_pixel(splat_screen_transform(g, cam.world_to_screen()), x, y, near_plane);
}

Vec3 camera_facing_normal(const Gaussian2D& g, const CameraModel& cam) {
  Vec3 n = cam.world_to_camera.rotation * splat_normal(g);
  Vec3 p = cam.world_to_camera.apply(g.center);
  return n.dot(p) > 0.0 ? Vec3(-n) : n;
}

struct Rasterizer::State {
  CameraModel cam;
  Mat4 world_to_screen;
  std::size_t primitive_count = 0;
  std::vector<ProjectedSplat> splats;
  std::vector<std::uint32_t> order;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<std::uint32_t>> tile_lists;
};

Rasterizer::Rasterizer(RasterSettings settings) : settings_(settings) {
  require(settings_.tile_size > 0, ErrorCode::InvalidArgument, "tile size must be positive");
}
Rasterizer::~Rasterizer() = default;
Rasterizer::Rasterizer(Rasterizer&&) noexcept = default;
Rasterizer& Rasterizer::operator=(Rasterizer&&) noexcept = default;

const std::vector<std::uint32_t>& Rasterizer::sort_order() const {
  require(state_ != nullptr, ErrorCode::ContractViolation, "rasterizer has no forward state");
  return state_->order;
}

FrameBuffer Rasterizer::forward(std::span<const Gaussian2D> prims, const CameraModel& cam) {
  cam.validate();
  auto st = std::make_unique<State>();
  st->cam = cam;
  st->world_to_screen = cam.world_to_screen();
  st->primitive_count = prims.size();
  st->splats.resize(prims.size());
  const RasterSettings& s = settings_;
  const Vec3 cam_center = cam.center_world();
  const Mat3& rot = cam.world_to_camera.rotation;
  const double c = s.cutoff_sigma;

  // Preprocess: screen transform, bounds, view-dependent color, normals.
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const Gaussian2D& g = prims[i];
    ProjectedSplat& sp = st->splats[i];
    sp.transform = splat_screen_transform(g, st->world_to_screen);
    sp.sort_depth = sp.transform(2, 2);
    sp.opacity = sigmoid(g.opacity_logit);

    int behind = 0;
    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_x;
    for (double cu : {-c, c}) {
      for (double cv : {-c, c}) {
        Vec3 q = sp.transform * Vec3(cu, cv, 1.0);
        if (!(q.z() > s.near_plane)) {
          ++behind;
          continue;
        }
        double px = q.x() / q.z(), py = q.y() / q.z();
        min_x = std::min(min_x, px);
        max_x = std::max(max_x, px);
        min_y = std::min(min_y, py);
        max_y = std::max(max_y, py);
      }
    }
    if (behind == 4) continue;
    if (behind > 0) {
      sp.x0 = 0;
      sp.y0 = 0;
      sp.x1 = cam.width - 1;
      sp.y1 = cam.height - 1;
    } else {
      sp.x0 = static_cast<int>(std::max(0.0, std::ceil(min_x)));
      sp.y0 = static_cast<int>(std::max(0.0, std::ceil(min_y)));
      sp.x1 = static_cast<int>(std::min<double>(cam.width - 1, std::floor(max_x)));
      sp.y1 = static_cast<int>(std::min<double>(cam.height - 1, std::floor(max_y)));
    }
    if (sp.x0 > sp.x1 || sp.y0 > sp.y1) continue;
    sp.visible = true;

    Vec3 to_splat = g.center - cam_center;
    sp.view_dist = to_splat.norm();
    sp.view_dir = sp.view_dist > 0.0 ? Vec3(to_splat / sp.view_dist) : Vec3::UnitZ();
    ShBasis basis = sh_basis(g.sh_color.degree(), sp.view_dir);
    for (int ch = 0; ch < 3; ++ch) {
      sp.color_raw[ch] = eval_sh_channel(g.sh_color, ch, basis);
      sp.color[ch] = decode_color(sp.color_raw[ch]);
    }
    Vec3 n = rot * splat_normal(g);
    Vec3 p_cam = cam.world_to_camera.apply(g.center);
    sp.normal_sign = n.dot(p_cam) > 0.0 ? -1.0 : 1.0;
    sp.normal_cam = sp.normal_sign * n;
  }

  // Global depth sort, ties by primitive index.
  for (std::size_t i = 0; i < prims.size(); ++i) {
    if (st->splats[i].visible) st->order.push_back(static_cast<std::uint32_t>(i));
  }
  std::sort(st->order.begin(), st->order.end(), [&](std::uint32_t a, std::uint32_t b) {
    double da = st->splats[a].sort_depth, db = st->splats[b].sort_depth;
    return da < db || (da == db && a < b);
  });

  const int ts = s.tile_size;
  st->tiles_x = (cam.width + ts - 1) / ts;
  st->tiles_y = (cam.height + ts - 1) / ts;
  st->tile_lists.assign(static_cast<std::size_t>(st->tiles_x) * st->tiles_y, {});
  for (std::uint32_t id : st->order) {
    const ProjectedSplat& sp = st->splats[id];
    for (int ty = sp.y0 / ts; ty <= sp.y1 / ts; ++ty) {
      for (int tx = sp.x0 / ts; tx <= sp.x1 / ts; ++tx) {
        st->tile_lists[static_cast<std::size_t>(ty) * st->tiles_x + tx].push_back(id);
      }
    }
  }

  FrameBuffer fb(cam.width, cam.height);
  const State& state = *st;
  parallel_for(state.tile_lists.size(), [&](std::size_t tile) {
    const int tx = static_cast<int>(tile % state.tiles_x);
    const int ty = static_cast<int>(tile / state.tiles_x);
    const auto& list = state.tile_lists[tile];
    for (int y = ty * ts; y < std::min(cam.height, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(cam.width, (tx + 1) * ts); ++x) {
        const std::size_t pix = fb.index(x, y);
        double trans = 1.0;
        Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
        double depth = 0.0;
        int count = 0;
        for (std::uint32_t id : list) {
          const ProjectedSplat& sp = state.splats[id];
          if (x < sp.x0 || x > sp.x1 || y < sp.y0 || y > sp.y1) continue;
          double u, v, z, gauss, a;
          if (!evaluate_pixel(sp, x, y, s, u, v, z, gauss, a)) continue;
          const double w = a * trans;
          color += w * sp.color;
          depth += w * z;
          normal += w * sp.normal_cam;
          ++count;
          trans *= 1.0 - a;
          if (trans < s.termination_transmittance) break;
        }
        color += trans * s.background;
        for (int ch = 0; ch < 3; ++ch) {
          fb.color[3 * pix + ch] = color[ch];
          fb.normal[3 * pix + ch] = normal[ch];
        }
        fb.depth[pix] = depth;
        fb.alpha[pix] = 1.0 - trans;
        fb.count[pix] = count;
      }
    }
  });

  state_ = std::move(st);
  return fb;
}

GradientBuffer Rasterizer::backward(std::span<const Gaussian2D> prims,
                                    const FrameBufferGrad& up) const {
  require(state_ != nullptr, ErrorCode::ContractViolation, "rasterize_backward without forward state");
  const State& st = *state_;
  require(prims.size() == st.primitive_count, ErrorCode::ContractViolation,
          "rasterize_backward: primitive count differs from forward pass");
  const CameraModel& cam = st.cam;
  require(up.width == cam.width && up.height == cam.height &&
              up.color.size() == 3 * static_cast<std::size_t>(cam.width) * cam.height &&
              up.depth.size() == static_cast<std::size_t>(cam.width) * cam.height &&
              up.alpha.size() == up.depth.size() && up.normal.size() == up.color.size(),
          ErrorCode::ShapeMismatch, "upstream gradient shape differs from frame buffer");

  const RasterSettings& s = settings_;
  const int ts = s.tile_size;
  std::vector<std::vector<SplatGrad>> tile_grads(st.tile_lists.size());

  parallel_for(st.tile_lists.size(), [&](std::size_t tile) {
    const auto& list = st.tile_lists[tile];
    if (list.empty()) return;
    auto& grads = tile_grads[tile];
    grads.assign(list.size(), SplatGrad{});
    const int tx = static_cast<int>(tile % st.tiles_x);
    const int ty = static_cast<int>(tile / st.tiles_x);
    std::vector<Contribution> contribs;
    for (int y = ty * ts; y < std::min(cam.height, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(cam.width, (tx + 1) * ts); ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
        const Vec3 g_color(up.color[3 * pix], up.color[3 * pix + 1], up.color[3 * pix + 2]);
        const Vec3 g_normal(up.normal[3 * pix], up.normal[3 * pix + 1], up.normal[3 * pix + 2]);
        const double g_depth = up.depth[pix];
        const double g_alpha = up.alpha[pix];
        if (g_color.isZero(0) && g_normal.isZero(0) && g_depth == 0.0 && g_alpha == 0.0) continue;

        // Replay the forward pass for this pixel.
        contribs.clear();
        double trans = 1.0;
        for (std::uint32_t slot = 0; slot < list.size(); ++slot) {
          const ProjectedSplat& sp = st.splats[list[slot]];
          if (x < sp.x0 || x > sp.x1 || y < sp.y0 || y > sp.y1) continue;
          Contribution c{};
          if (!evaluate_pixel(sp, x, y, s, c.u, c.v, c.z, c.gauss, c.a)) continue;
          c.slot = slot;
          c.transmittance = trans;
          contribs.push_back(c);
          trans *= 1.0 - c.a;
          if (trans < s.termination_transmittance) break;
        }

        // Back to front. `after_*` is the composite of everything behind the
        // current splat (including the background), seen through it.
        Vec3 after_color = s.background, after_normal = Vec3::Zero();
        double after_depth = 0.0, after_alpha = 0.0;
        for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
          const Contribution& c = *it;
          const ProjectedSplat& sp = st.splats[list[c.slot]];
          SplatGrad& g = grads[c.slot];
          const double w = c.a * c.transmittance;

          g.color += w * g_color;
          g.normal += w * g_normal;
          double g_z = w * g_depth;

          const double g_a = c.transmittance * (g_color.dot(sp.color - after_color) +
                                                g_depth * (c.z - after_depth) +
                                                g_normal.dot(sp.normal_cam - after_normal) +
                                                g_alpha * (1.0 - after_alpha));
          after_color = c.a * sp.color + (1.0 - c.a) * after_color;
          after_depth = c.a * c.z + (1.0 - c.a) * after_depth;
          after_normal = c.a * sp.normal_cam + (1.0 - c.a) * after_normal;
          after_alpha = c.a + (1.0 - c.a) * after_alpha;

          g.opacity += g_a * c.gauss;
          const double g_gauss = g_a * sp.opacity;
          double g_u = -c.u * c.gauss * g_gauss;
          double g_v = -c.v * c.gauss * g_gauss;

          const auto& t = sp.transform;
          g_u += g_z * t(2, 0);
          g_v += g_z * t(2, 1);
          g.transform(2, 0) += g_z * c.u;
          g.transform(2, 1) += g_z * c.v;
          g.transform(2, 2) += g_z;

          // (u, v) solves A (u, v) = -b with A, b built from the pixel planes.
          const double hx0 = t(0, 0) - x * t(2, 0), hx1 = t(0, 1) - x * t(2, 1);
          const double hy0 = t(1, 0) - y * t(2, 0), hy1 = t(1, 1) - y * t(2, 1);
          const double det = hx0 * hy1 - hx1 * hy0;
          const double l0 = (g_u * hy1 - hy0 * g_v) / det;
          const double l1 = (hx0 * g_v - hx1 * g_u) / det;
          const Vec3 g_hx(-l0 * c.u, -l0 * c.v, -l0);
          const Vec3 g_hy(-l1 * c.u, -l1 * c.v, -l1);
          g.transform.row(0) += g_hx.transpose();
          g.transform.row(1) += g_hy.transpose();
          g.transform.row(2) -= (x * g_hx + y * g_hy).transpose();
        }
      }
    }
  });

  // Deterministic reduction in tile order.
  std::vector<SplatGrad> totals(prims.size());
  for (std::size_t tile = 0; tile < st.tile_lists.size(); ++tile) {
    const auto& list = st.tile_lists[tile];
    const auto& grads = tile_grads[tile];
    for (std::size_t k = 0; k < grads.size(); ++k) totals[list[k]] += grads[k];
  }

  ParamLayout layout(prims.empty() ? ShDegrees{} : prims.front().degrees());
  GradientBuffer out(prims.size(), layout);
  const Eigen::Matrix<double, 3, 4> rows = screen_rows(st.world_to_screen);
  const Mat3& rot = cam.world_to_camera.rotation;

  parallel_for(prims.size(), [&](std::size_t i) {
    const ProjectedSplat& sp = st.splats[i];
    if (!sp.visible) return;
    const Gaussian2D& g = prims[i];
    const SplatGrad& sg = totals[i];
    auto row = out.row(i);
    const ActivatedParams act = activate(g);

    // T = P H  =>  dL/dH = P^T dL/dT
    const Eigen::Matrix<double, 4, 3> g_h = rows.transpose() * sg.transform;
    const Vec3 g_su_tu = g_h.block<3, 1>(0, 0);
    const Vec3 g_sv_tv = g_h.block<3, 1>(0, 1);
    Vec3 g_center = g_h.block<3, 1>(0, 2);
    Vec3 g_tu = act.scale_u * g_su_tu;
    Vec3 g_tv = act.scale_v * g_sv_tv;
    row[ParamLayout::kLogScaleU] = act.scale_u * g.tangent_u.dot(g_su_tu);
    row[ParamLayout::kLogScaleV] = act.scale_v * g.tangent_v.dot(g_sv_tv);
    row[ParamLayout::kOpacity] = sg.opacity * act.opacity * (1.0 - act.opacity);

    // Color: clamp(SH(dir) + 0.5), dir = normalize(center - camera).
    const int degree = g.sh_color.degree();
    const int n_coeffs = g.sh_color.coeffs_per_channel();
    const ShBasis basis = sh_basis(degree, sp.view_dir);
    const auto dbasis = sh_basis_gradient(degree, sp.view_dir);
    Vec3 g_dir = Vec3::Zero();
    for (int ch = 0; ch < 3; ++ch) {
      const double shifted = sp.color_raw[ch] + 0.5;
      if (!(shifted > 0.0 && shifted < 1.0)) continue;
      const double g_raw = sg.color[ch];
      for (int k = 0; k < n_coeffs; ++k) {
        row[ParamLayout::kShColor + ch * n_coeffs + k] += g_raw * basis[k];
        g_dir += g_raw * g.sh_color.at(ch, k) * dbasis[k];
      }
    }
    if (sp.view_dist > 0.0) {
      g_center += (g_dir - sp.view_dir * sp.view_dir.dot(g_dir)) / sp.view_dist;
    }

    // Normal: sign * R * normalize(t_u x t_v).
    const Vec3 m = g.tangent_u.cross(g.tangent_v);
    const double m_norm = m.norm();
    if (m_norm > 0.0) {
      const Vec3 n_hat = m / m_norm;
      const Vec3 g_n = sp.normal_sign * (rot.transpose() * sg.normal);
      const Vec3 g_m = (g_n - n_hat * n_hat.dot(g_n)) / m_norm;
      g_tu += g.tangent_v.cross(g_m);
      g_tv += g_m.cross(g.tangent_u);
    }

    for (int k = 0; k < 3; ++k) {
      row[ParamLayout::kCenter + k] = g_center[k];
      row[ParamLayout::kTangentU + k] = g_tu[k];
      row[ParamLayout::kTangentV + k] = g_tv[k];
    }
  });
  return out;
}

FrameBuffer rasterize(std::span<const Gaussian2D> prims, const CameraModel& cam,
                      const RasterSettings& settings) {
  Rasterizer r(settings);
  return r.forward(prims, cam);
}

}  // namespace hsplat
