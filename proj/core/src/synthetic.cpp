#include "hsplat/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "hsplat/error.hpp"
#include "hsplat/io/atomic_file.hpp"
#include "hsplat/io/planar_image.hpp"
#include "hsplat/io/png_image.hpp"
#include "hsplat/io/scene_file.hpp"
#include "hsplat/random.hpp"
#include "hsplat/rasterizer.hpp"
#include "hsplat/raytracer.hpp"

namespace hsplat {
namespace {

constexpr double kPi = std::numbers::pi;

struct Surface {
  std::function<Vec3(const Vec3&)> color;
  std::function<double(const Vec3&)> intensity;
  std::function<double(const Vec3&)> raydrop;
};

// Grid of splats over the rectangle origin + a * [0, len_a] + b * [0, len_b].
void add_patch(std::vector<Gaussian2D>& out, const ShDegrees& degrees, const Vec3& origin, const Vec3& a,
               double len_a, const Vec3& b, double len_b, double spacing, const Surface& s) {
  const int na = std::max(1, static_cast<int>(std::lround(len_a / spacing)));
  const int nb = std::max(1, static_cast<int>(std::lround(len_b / spacing)));
  const double da = len_a / na, db = len_b / nb;
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      Gaussian2D g = Gaussian2D::zeros(degrees);
      g.center = origin + (i + 0.5) * da * a + (j + 0.5) * db * b;
      g.tangent_u = a;
      g.tangent_v = b;
      g.log_scale_u = std::log(0.55 * da);
      g.log_scale_v = std::log(0.55 * db);
      g.opacity_logit = logit(0.9);
      const Vec3 c = s.color(g.center);
      for (int ch = 0; ch < 3; ++ch) g.sh_color.at(ch, 0) = (std::clamp(c[ch], 0.0, 1.0) - 0.5) / kShC0;
      g.sh_intensity.at(0, 0) = logit(std::clamp(s.intensity(g.center), 1e-3, 1.0 - 1e-3)) / kShC0;
      g.sh_raydrop.at(0, 0) = logit(std::clamp(s.raydrop(g.center), 1e-3, 1.0 - 1e-3)) / kShC0;
      out.push_back(std::move(g));
    }
  }
}

struct Palette {
  Vec3 phase;
  Vec3 base;

  explicit Palette(Rng& rng) {
    for (int i = 0; i < 3; ++i) {
      phase[i] = uniform(rng, 0.0, 2.0 * kPi);
      base[i] = uniform(rng, 0.35, 0.65);
    }
  }

  Vec3 at(double p, double q, double wavelength) const {
    Vec3 c;
    for (int i = 0; i < 3; ++i) {
      c[i] = base[i] + 0.3 * std::sin(2.0 * kPi * p / wavelength + phase[i]) *
                           std::cos(2.0 * kPi * q / (1.3 * wavelength) + 0.5 * phase[i]);
    }
    return c;
  }
};

Surface plain_surface(const Palette& pal, int u_axis, int v_axis, double wavelength) {
  Surface s;
  s.color = [pal, u_axis, v_axis, wavelength](const Vec3& p) { return pal.at(p[u_axis], p[v_axis], wavelength); };
  s.intensity = [u_axis, wavelength](const Vec3& p) {
    return 0.45 + 0.25 * std::sin(2.0 * kPi * p[u_axis] / (2.0 * wavelength));
  };
  s.raydrop = [](const Vec3&) { return 0.02; };
  return s;
}

struct Rig {
  Vec3 eye;
  Vec3 target;
};

struct Recipe {
  SceneGraph scene;
  std::function<Rig(double)> rig;  // sensor placement at time t
  std::vector<double> elevations;
  double azimuth_min = -kPi;
  double azimuth_max = kPi;
  double max_range = 80.0;
  double focal_fraction = 0.8;  // fx = focal_fraction * width
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

void add_floor_and_wall(SceneGraph& g, const Palette& pal, double spacing) {
  auto& bg = g.background().primitives;
  add_patch(bg, g.degrees, Vec3(0, -5, -1), Vec3::UnitX(), 10.0, Vec3::UnitY(), 10.0, spacing,
            plain_surface(pal, 0, 1, 1.5));
  add_patch(bg, g.degrees, Vec3(10, -5, -1), Vec3::UnitY(), 10.0, Vec3::UnitZ(), 3.0, spacing,
            plain_surface(pal, 1, 2, 1.5));
}

Recipe textured_plane(const SyntheticOptions& o, Rng& rng) {
  Recipe r;
  const double h = o.spacing > 0.0 ? o.spacing : 0.125;
  const Palette pal(rng);
  Surface s = plain_surface(pal, 1, 2, 0.9);
  const Vec3 drop_center(4.0, 1.2, 0.6);
  s.raydrop = [drop_center](const Vec3& p) { return (p - drop_center).norm() < 0.45 ? 0.9 : 0.02; };
  add_patch(r.scene.background().primitives, r.scene.degrees, Vec3(4.0, -3.5, -2.0), Vec3::UnitY(), 7.0,
            Vec3::UnitZ(), 4.0, h, s);
  r.rig = [](double t) {
    const Vec3 eye(0.0, -0.6 + 1.2 * t, 0.0);
    return Rig{eye, eye + Vec3::UnitX()};
  };
  r.elevations = linspace(15.0 * kPi / 180.0, -15.0 * kPi / 180.0, o.lidar_channels);
  r.azimuth_min = -30.0 * kPi / 180.0;
  r.azimuth_max = 30.0 * kPi / 180.0;
  r.max_range = 20.0;
  return r;
}

Recipe box_room(const SyntheticOptions& o, Rng& rng) {
  Recipe r;
  const double h = o.spacing > 0.0 ? o.spacing : 0.25;
  const Palette pal(rng);
  auto& bg = r.scene.background().primitives;
  const ShDegrees& d = r.scene.degrees;
  const Vec3 lo(-4, -3, -1.5);
  const Vec3 size(8, 6, 3);
  // Floor, ceiling, and four walls; tangents chosen so normals face inward.
  add_patch(bg, d, lo, Vec3::UnitX(), size.x(), Vec3::UnitY(), size.y(), h, plain_surface(pal, 0, 1, 1.2));
  add_patch(bg, d, lo + Vec3(0, 0, size.z()), Vec3::UnitY(), size.y(), Vec3::UnitX(), size.x(), h,
            plain_surface(pal, 0, 1, 1.7));
  add_patch(bg, d, lo, Vec3::UnitZ(), size.z(), Vec3::UnitX(), size.x(), h, plain_surface(pal, 0, 2, 1.0));
  add_patch(bg, d, lo + Vec3(0, size.y(), 0), Vec3::UnitX(), size.x(), Vec3::UnitZ(), size.z(), h,
            plain_surface(pal, 0, 2, 1.4));
  add_patch(bg, d, lo, Vec3::UnitY(), size.y(), Vec3::UnitZ(), size.z(), h, plain_surface(pal, 1, 2, 0.8));
  add_patch(bg, d, lo + Vec3(size.x(), 0, 0), Vec3::UnitZ(), size.z(), Vec3::UnitY(), size.y(), h,
            plain_surface(pal, 1, 2, 1.1));
  r.rig = [](double t) {
    const Vec3 eye(-1.0 + 2.0 * t, 0.0, 0.0);
    const double yaw = 2.0 * kPi * t;
    return Rig{eye, eye + Vec3(std::cos(yaw), std::sin(yaw), -0.1)};
  };
  r.elevations = linspace(15.0 * kPi / 180.0, -25.0 * kPi / 180.0, o.lidar_channels);
  r.max_range = 20.0;
  return r;
}

Recipe moving_box(const SyntheticOptions& o, Rng& rng) {
  Recipe r;
  const double h = o.spacing > 0.0 ? o.spacing : 0.25;
  const Palette pal(rng);
  add_floor_and_wall(r.scene, pal, h);
  r.scene.keyframes = linspace(0.0, 1.0, 5);
  SceneNode box;
  box.kind = NodeKind::Rigid;
  box.name = "box";
  const double hb = 0.5 * h;
  const Palette box_pal(rng);
  const ShDegrees& d = r.scene.degrees;
  auto& prims = box.primitives;
  // Five faces of a unit cube centered at the origin (no bottom face).
  add_patch(prims, d, Vec3(-0.5, -0.5, 0.5), Vec3::UnitX(), 1.0, Vec3::UnitY(), 1.0, hb, plain_surface(box_pal, 0, 1, 0.6));
  add_patch(prims, d, Vec3(-0.5, -0.5, -0.5), Vec3::UnitY(), 1.0, Vec3::UnitZ(), 1.0, hb, plain_surface(box_pal, 1, 2, 0.6));
  add_patch(prims, d, Vec3(0.5, -0.5, -0.5), Vec3::UnitZ(), 1.0, Vec3::UnitY(), 1.0, hb, plain_surface(box_pal, 1, 2, 0.7));
  add_patch(prims, d, Vec3(-0.5, -0.5, -0.5), Vec3::UnitZ(), 1.0, Vec3::UnitX(), 1.0, hb, plain_surface(box_pal, 0, 2, 0.6));
  add_patch(prims, d, Vec3(-0.5, 0.5, -0.5), Vec3::UnitX(), 1.0, Vec3::UnitZ(), 1.0, hb, plain_surface(box_pal, 0, 2, 0.7));
  for (double t : r.scene.keyframes) {
    RigidPose p;
    p.timestamp = t;
    p.translation = Vec3(5.0, -2.0 + 4.0 * t, -0.5);
    box.poses.push_back(p);
  }
  r.scene.nodes.push_back(std::move(box));
  r.rig = [](double) { return Rig{Vec3(0.0, 0.0, 0.5), Vec3(5.0, 0.0, -0.5)}; };
  r.elevations = linspace(10.0 * kPi / 180.0, -25.0 * kPi / 180.0, o.lidar_channels);
  r.azimuth_min = -60.0 * kPi / 180.0;
  r.azimuth_max = 60.0 * kPi / 180.0;
  r.max_range = 30.0;
  return r;
}

Recipe walker(const SyntheticOptions& o, Rng& rng) {
  Recipe r;
  const double h = o.spacing > 0.0 ? o.spacing : 0.25;
  const Palette pal(rng);
  add_floor_and_wall(r.scene, pal, h);
  r.scene.keyframes = linspace(0.0, 1.0, 9);
  SceneNode body;
  body.kind = NodeKind::Deformable;
  body.name = "walker";
  const Palette body_pal(rng);
  const double hb = 0.5 * h;
  // Front and back faces of a 0.3 x 0.6 x 1.6 slab.
  add_patch(body.primitives, r.scene.degrees, Vec3(-0.15, -0.3, -0.8), Vec3::UnitZ(), 1.6, Vec3::UnitY(), 0.6, hb,
            plain_surface(body_pal, 1, 2, 0.5));
  add_patch(body.primitives, r.scene.degrees, Vec3(0.15, -0.3, -0.8), Vec3::UnitY(), 0.6, Vec3::UnitZ(), 1.6, hb,
            plain_surface(body_pal, 1, 2, 0.5));
  for (double t : r.scene.keyframes) {
    RigidPose p;
    p.timestamp = t;
    p.translation = Vec3(5.0, -1.5 + 3.0 * t, -0.2);
    body.poses.push_back(p);
    DeformKeyframe kf;
    for (const Gaussian2D& g : body.primitives) {
      const double z = g.center.z();
      const double side = g.center.y() < 0.0 ? 0.0 : kPi;
      const double swing = z < 0.0 ? 0.2 * std::sin(4.0 * kPi * t + side) * (-z / 0.8) : 0.0;
      kf.offsets.emplace_back(swing, 0.0, 0.0);
      kf.rotations.push_back(Quat::Identity());
    }
    body.deform.push_back(std::move(kf));
  }
  r.scene.nodes.push_back(std::move(body));
  r.rig = [](double) { return Rig{Vec3(0.0, 0.0, 0.5), Vec3(5.0, 0.0, -0.3)}; };
  r.elevations = linspace(10.0 * kPi / 180.0, -25.0 * kPi / 180.0, o.lidar_channels);
  r.azimuth_min = -60.0 * kPi / 180.0;
  r.azimuth_max = 60.0 * kPi / 180.0;
  r.max_range = 30.0;
  return r;
}

Recipe make_recipe(const SyntheticOptions& o) {
  require(o.camera_width > 1 && o.camera_height > 1 && o.lidar_channels > 0 && o.lidar_cols > 0,
          ErrorCode::InvalidArgument, "synthetic sensor resolutions must be positive");
  require(o.train_views >= 1 && o.test_views >= 0, ErrorCode::InvalidArgument,
          "synthetic data needs at least one training view");
  Rng rng(o.seed);
  if (o.recipe == "textured-plane") return textured_plane(o, rng);
  if (o.recipe == "box-room") return box_room(o, rng);
  if (o.recipe == "moving-box") return moving_box(o, rng);
  if (o.recipe == "walker") return walker(o, rng);
  fail(ErrorCode::UnknownRecipe, "unknown synthetic recipe '" + o.recipe + "'");
}

std::string frame_name(const char* prefix, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04zu%s", prefix, i, ext);
  return buf;
}

}  // namespace

const std::vector<std::string>& synthetic_recipes() {
  static const std::vector<std::string> names = {"textured-plane", "box-room", "moving-box", "walker"};
  return names;
}

SceneGraph synthetic_scene(const SyntheticOptions& options) { return make_recipe(options).scene; }

SyntheticData generate_synthetic(const SyntheticOptions& o) {
  Recipe recipe = make_recipe(o);
  recipe.scene.validate();
  SyntheticData data;
  data.recipe = o.recipe;
  data.scene = recipe.scene;

  struct Slot {
    double t;
    const char* split;
  };
  std::vector<Slot> slots;
  for (int i = 0; i < o.train_views; ++i) {
    slots.push_back({o.train_views == 1 ? 0.0 : static_cast<double>(i) / (o.train_views - 1), "train"});
  }
  for (int j = 0; j < o.test_views; ++j) slots.push_back({(j + 0.5) / o.test_views, "test"});
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.t < b.t; });

  Rasterizer raster;
  for (const Slot& slot : slots) {
    const Rig rig = recipe.rig(slot.t);
    const FlatScene flat = flatten(data.scene, slot.t);

    SyntheticView view;
    view.timestamp = slot.t;
    view.split = slot.split;
    const double f = recipe.focal_fraction * o.camera_width;
    view.camera = CameraModel::look_at(rig.eye, rig.target, Vec3::UnitZ(), f, f, o.camera_width, o.camera_height);
    const FrameBuffer fb = raster.forward(flat.primitives, view.camera);
    view.color = Image(fb.width, fb.height, 3);
    view.color.data = fb.color;
    view.depth = fb.depth;
    view.alpha = fb.alpha;
    data.views.push_back(std::move(view));

    SyntheticSweep sweep;
    sweep.timestamp = slot.t;
    sweep.split = slot.split;
    sweep.lidar.channels = o.lidar_channels;
    sweep.lidar.azimuth_steps = o.lidar_cols;
    sweep.lidar.elevations = recipe.elevations;
    sweep.lidar.azimuth_min = recipe.azimuth_min;
    sweep.lidar.azimuth_max = recipe.azimuth_max;
    sweep.lidar.max_range = recipe.max_range;
    RigidPose pose;
    pose.timestamp = slot.t;
    pose.translation = rig.eye;
    sweep.lidar.poses = {pose};
    sweep.range = trace(flat.primitives, generate_rays(sweep.lidar, slot.t));
    data.sweeps.push_back(std::move(sweep));
  }
  return data;
}

Dataset SyntheticData::dataset(const std::string& split) const {
  Dataset d;
  for (const SyntheticView& v : views) {
    if (split != "all" && v.split != split) continue;
    d.cameras.push_back({v.timestamp, v.camera, v.color});
  }
  for (const SyntheticSweep& s : sweeps) {
    if (split != "all" && s.split != split) continue;
    d.lidars.push_back({s.timestamp, s.lidar, s.range});
  }
  return d;
}

io::DatasetManifest write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  io::DirectoryLock lock(dir);
  io::DatasetManifest m;
  for (std::size_t i = 0; i < data.views.size(); ++i) {
    const SyntheticView& v = data.views[i];
    io::CameraEntry e;
    e.timestamp = v.timestamp;
    e.split = v.split;
    e.camera = v.camera;
    e.image = std::filesystem::path("images") / frame_name("cam", i, ".png");
    e.depth = std::filesystem::path("depth") / frame_name("cam", i, ".hsimg");
    io::write_png(dir / e.image, v.color);
    io::PlanarImage planes;
    planes.rows = v.camera.height;
    planes.cols = v.camera.width;
    planes.names = {"D", "A"};
    planes.planes = {std::vector<float>(v.depth.begin(), v.depth.end()),
                     std::vector<float>(v.alpha.begin(), v.alpha.end())};
    io::save_planar(dir / e.depth, planes);
    m.cameras.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < data.sweeps.size(); ++i) {
    const SyntheticSweep& s = data.sweeps[i];
    io::LidarEntry e;
    e.timestamp = s.timestamp;
    e.split = s.split;
    e.lidar = s.lidar;
    e.range = std::filesystem::path("lidar") / frame_name("sweep", i, ".hsimg");
    io::save_planar(dir / e.range, io::range_image_planes(s.range));
    m.lidars.push_back(std::move(e));
  }
  io::save_scene(dir / "scene.hsplat", data.scene);
  io::save_manifest(dir / "manifest.txt", m);
  return m;
}

Aabb node_world_bounds(const SceneGraph& graph, std::size_t node, double t) {
  require(node < graph.nodes.size(), ErrorCode::OutOfRange, "node index out of range");
  const FlatScene flat = flatten(graph, t);
  Aabb box;
  for (std::size_t i = 0; i < flat.primitives.size(); ++i) {
    if (flat.provenance[i].node == node) box.expand(flat.primitives[i].center);
  }
  return box;
}

}  // namespace hsplat
