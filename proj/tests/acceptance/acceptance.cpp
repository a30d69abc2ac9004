// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.
//
//   hsplat_acceptance [--workdir DIR] [--only NAME]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hsplat/evaluate.hpp"
#include "hsplat/init.hpp"
#include "hsplat/io/atomic_file.hpp"
#include "hsplat/metrics.hpp"
#include "hsplat/parallel.hpp"
#include "hsplat/raster_range.hpp"
#include "hsplat/rasterizer.hpp"
#include "hsplat/raytracer.hpp"
#include "hsplat/spatial.hpp"
#include "hsplat/synthetic.hpp"
#include "hsplat/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

#ifdef HSPLAT_WITH_CLI
#include "cli.hpp"
#endif

using namespace hsplat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---- renderer oracles -------------------------------------------------------

Outcome raster_oracle() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  const CameraModel cam = hsplat::testing::test_camera(64, 64, 60.0);
  double worst = 0.0;
  const int scenes = 20;
  for (int s = 0; s < scenes; ++s) {
    const std::size_t n = 20 + static_cast<std::size_t>(uniform01(rng) * 180);
    const auto prims = hsplat::testing::random_camera_scene(rng, n, cam);
    const FrameBuffer fast = rasterize(prims, cam);
    const FrameBuffer ref = oracle::rasterize(prims, cam);
    worst = std::max({worst, max_abs_diff(fast.color, ref.color), max_abs_diff(fast.depth, ref.depth),
                      max_abs_diff(fast.alpha, ref.alpha), max_abs_diff(fast.normal, ref.normal)});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 60.0,
          fmt("%d scenes <= 200 splats at 64x64, max abs error %.3g (<= 1e-6), %.1f s (< 60 s)", scenes, worst, secs)};
}

Outcome trace_oracle() {
  const auto t0 = Clock::now();
  Rng rng(1002);
  const LidarModel lidar = hsplat::testing::test_lidar(32, 128, Vec3::Zero());
  const RayBundle rays = generate_rays(lidar, 0.0);
  double worst = 0.0;
  const int scenes = 20;
  for (int s = 0; s < scenes; ++s) {
    const std::size_t n = 100 + static_cast<std::size_t>(uniform01(rng) * 900);
    const auto prims = hsplat::testing::random_shell_scene(rng, n, Vec3::Zero(), 2.0, 12.0, 3.0);
    const RangeImage ref = oracle::trace(prims, rays);
    for (int k : {1, 2, 8, 16}) {
      TraceSettings ts;
      ts.k = k;
      const RangeImage fast = trace(prims, rays, ts);
      worst = std::max({worst, max_abs_diff(fast.depth, ref.depth), max_abs_diff(fast.intensity, ref.intensity),
                        max_abs_diff(fast.raydrop, ref.raydrop), max_abs_diff(fast.alpha, ref.alpha)});
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 120.0,
          fmt("%d scenes <= 1000 splats, 32x128 scan, k in {1,2,8,16}, max abs error %.3g (<= 1e-6), %.1f s (< 120 s)",
              scenes, worst, secs)};
}

// ---- gradients ---------------------------------------------------------------

Outcome gradients() {
  using hsplat::testing::LossTerm;
  const auto t0 = Clock::now();
  Rng rng(1003);
  const CameraModel cam = hsplat::testing::test_camera(24, 18, 22.0);
  // Normal, depth and intensity terms only see opaque cells, so use large, dense splats.
  hsplat::testing::SplatRanges dense;
  dense.log_scale_min = std::log(0.3);
  dense.log_scale_max = std::log(0.8);
  dense.opacity_min = 0.6;
  dense.opacity_max = 0.95;
  const auto cam_prims = hsplat::testing::random_camera_scene(rng, 12, cam, 1.5, 4.0, dense);
  Image target(cam.width, cam.height, 3);
  for (double& v : target.data) v = uniform01(rng);

  const LidarModel lidar = hsplat::testing::test_lidar(8, 32, Vec3::Zero());
  const RayBundle rays = generate_rays(lidar, 0.0);
  const auto lidar_prims = hsplat::testing::random_shell_scene(rng, 16, Vec3::Zero(), 2.0, 5.0, 1.0, dense);
  RangeImage range_target = trace(lidar_prims, rays);
  for (std::size_t i = 0; i < range_target.cells(); ++i) {
    const bool valid = range_target.alpha[i] > 0.5 && uniform01(rng) < 0.9;
    range_target.depth[i] = valid ? range_target.alpha[i] * uniform(rng, 2.0, 5.0) : 0.0;
    range_target.intensity[i] = uniform01(rng);
    range_target.raydrop[i] = valid ? 0.0 : 1.0;
    if (!valid) range_target.alpha[i] = 0.0;
  }

  bool ok = true;
  std::ostringstream detail;
  for (LossTerm term : {LossTerm::L1, LossTerm::Ssim, LossTerm::Normal, LossTerm::Depth, LossTerm::Intensity,
                        LossTerm::Raydrop}) {
    const bool camera = term == LossTerm::L1 || term == LossTerm::Ssim || term == LossTerm::Normal;
    const auto res = camera ? hsplat::testing::check_camera_term(cam_prims, cam, target, term)
                            : hsplat::testing::check_lidar_term(lidar_prims, rays, range_target, term);
    const bool term_ok = res.pass_rate() >= 0.99 && res.nonzero > 0;
    ok = ok && term_ok;
    detail << hsplat::testing::to_string(term) << fmt(" %.2f%% (%zu nonzero)", 100.0 * res.pass_rate(), res.nonzero);
    if (!term_ok) detail << " (worst " << res.worst << ")";
    detail << ", ";
  }
  const double secs = seconds_since(t0);
  detail << fmt("rel 1e-3 / abs 1e-6, >= 99%% required, %.1f s (< 300 s)", secs);
  return {ok && secs < 300.0, detail.str()};
}

// ---- cross-path ----------------------------------------------------------------

Outcome cross_path() {
  Rng rng(1004);
  const CameraModel cam = hsplat::testing::test_camera(64, 48, 50.0);
  std::vector<Gaussian2D> prims;
  for (int i = 0; i < 40; ++i) {
    hsplat::testing::SplatRanges r;
    r.log_scale_min = std::log(0.1);
    r.log_scale_max = std::log(0.5);
    const double z = uniform(rng, 2.0, 6.0);
    Gaussian2D g = hsplat::testing::random_splat(rng, Vec3(uniform(rng, -1.5, 1.5) * z / 2.0,
                                                          uniform(rng, -1.0, 1.0) * z / 2.0, z), {}, r);
    g.tangent_u = Vec3::UnitX();
    g.tangent_v = Vec3::UnitY();
    prims.push_back(g);
  }
  const FrameBuffer fb = rasterize(prims, cam);
  RayBundle rays;
  rays.rows = cam.height;
  rays.cols = cam.width;
  rays.rays = cam.pixel_rays();
  const RangeImage ri = trace(prims, rays);
  const Vec3 forward = cam.camera_to_world().rotation * Vec3::UnitZ();
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t i = 0; i < fb.pixels(); ++i) {
    if (fb.alpha[i] < 1e-3 && ri.alpha[i] < 1e-3) continue;
    const double traced_z = ri.depth[i] * rays.rays[i].direction.dot(forward);
    const double scale = std::max(std::abs(fb.depth[i]), 1e-9);
    worst = std::max(worst, std::abs(traced_z - fb.depth[i]) / scale);
    ++compared;
  }
  return {compared > 100 && worst <= 1e-4,
          fmt("%zu covered pixels, max relative depth difference %.3g (<= 1e-4)", compared, worst)};
}

// ---- end-to-end fits -----------------------------------------------------------

SyntheticOptions fit_data_options(const std::string& recipe) {
  SyntheticOptions o;
  o.recipe = recipe;
  o.seed = 7;
  o.camera_width = 96;
  o.camera_height = 72;
  o.lidar_channels = 16;
  o.lidar_cols = 128;
  o.train_views = 8;
  o.test_views = 3;
  return o;
}

// Densification is off: the initial primitives already sample the surface at
// the right density, and splitting jittered splats only adds off-surface mass.
TrainConfig fit_config(int iterations) {
  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.seed = 1;
  cfg.densify.enabled = false;
  return cfg;
}

Outcome plane_fit() {
  const auto t0 = Clock::now();
  const SyntheticData data = generate_synthetic(fit_data_options("textured-plane"));
  const SceneGraph init = jitter_centers(data.scene, 0.05, 1);
  const FitResult fitted = fit(init, data.dataset("train"), fit_config(2000));
  const MetricReport m = evaluate_scene(fitted.scene, data.dataset("test"));
  const double secs = seconds_since(t0);
  const bool psnr_ok = m.psnr->infinite || m.psnr->db > 30.0;
  return {*m.depth_rmse < 0.02 && psnr_ok && *m.cd < 0.02 && secs < 900.0,
          fmt("2000 iterations from sigma 0.05 jitter: depth RMSE %.4f m (< 0.02), PSNR %.2f dB (> 30), CD %.4f m "
              "(< 0.02), %.0f s (< 900 s)",
              *m.depth_rmse, m.psnr->db, *m.cd, secs)};
}

Outcome moving_box_fit() {
  const auto t0 = Clock::now();
  const SyntheticData data = generate_synthetic(fit_data_options("moving-box"));
  const SceneGraph init = jitter_centers(data.scene, 0.05, 1);
  const FitResult fitted = fit(init, data.dataset("train"), fit_config(2000));
  EvalSettings es;
  es.crop_node = 1;
  const MetricReport m = evaluate_scene(fitted.scene, data.dataset("test"), es);
  const double secs = seconds_since(t0);
  return {*m.f_score > 0.9,
          fmt("held-out F-score@5cm on box points %.4f (> 0.9), %zu/%zu points, %.0f s", *m.f_score,
              m.predicted_points, m.reference_points, secs)};
}

// ---- ablation -------------------------------------------------------------------

// Exact hit of a ray from inside an axis-aligned box with its walls.
double exit_distance(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] > 1e-12) t = std::min(t, (hi[a] - o[a]) / d[a]);
    if (d[a] < -1e-12) t = std::min(t, (lo[a] - o[a]) / d[a]);
  }
  return t;
}

Outcome ablation() {
  // Inside box-room every wall and the floor is seen at grazing angles.
  SyntheticOptions o = fit_data_options("box-room");
  const SceneGraph scene = synthetic_scene(o);
  LidarModel lidar = hsplat::testing::test_lidar(32, 512, Vec3(0.5, 0.3, 0.2), 0.3, -0.6, 30.0);
  const FlatScene flat = flatten(scene, 0.0);
  const RayBundle rays = generate_rays(lidar, 0.0);

  const Vec3 lo(-4, -3, -1.5), hi(4, 3, 1.5);
  std::vector<Vec3> reference;
  for (const Ray& r : rays.rays) reference.push_back(r.origin + exit_distance(r.origin, r.direction, lo, hi) * r.direction);

  const PointCloud traced = extract_point_cloud(trace(flat.primitives, rays), lidar, 0.0);
  const PointCloud rastered = extract_point_cloud(rasterize_range_image(flat.primitives, lidar, 0.0), lidar, 0.0);
  const double cd_trace = chamfer_distance(traced.points, reference);
  const double cd_raster = chamfer_distance(rastered.points, reference);
  return {cd_trace < cd_raster,
          fmt("oblique box-room sweep: traced CD %.4f < rasterized-range CD %.4f (%zu vs %zu points)", cd_trace,
              cd_raster, traced.size(), rastered.size())};
}

// ---- metrics ----------------------------------------------------------------------

Outcome metrics() {
  std::vector<std::string> failed;
  const auto check = [&](bool c, const char* what) {
    if (!c) failed.push_back(what);
  };
  {
    const std::vector<Vec3> a{Vec3(0, 0, 0)}, b{Vec3(1, 0, 0)};
    check(chamfer_distance(a, b) == 2.0, "chamfer single points");
    check(chamfer_distance(a, a) == 0.0, "chamfer identical");
  }
  {
    const std::vector<Vec3> a{Vec3(0, 0, 0), Vec3(1, 0, 0)}, b{Vec3(0, 0, 0)};
    const FScore f = f_score(a, b);
    check(f.precision == 0.5 && f.recall == 1.0 && std::abs(f.f - 2.0 / 3.0) < 1e-15, "f-score 2/3");
    const std::vector<Vec3> far{Vec3(10, 0, 0)};
    check(f_score(a, far).f == 0.0, "f-score far");
  }
  {
    const ErrorStats s = error_stats(std::vector<double>{3, 4}, std::vector<double>{0, 0});
    check(std::abs(s.rmse - std::sqrt(12.5)) < 1e-15 && s.medae == 3.0, "rmse / medae");
  }
  {
    Image a(2, 1, 1), b(2, 1, 1);
    b.data = {0.1, 0.1};
    check(std::abs(psnr(a, b).db - 20.0) < 1e-12, "psnr 20 dB");
    check(psnr(a, a).infinite && ssim(a, a) == 1.0, "psnr / ssim identical");
  }
  Rng rng(1005);
  std::vector<Vec3> pts, other;
  for (int i = 0; i < 10000; ++i) {
    pts.emplace_back(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
    other.emplace_back(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
  }
  const VoxelGrid grid(pts);
  std::size_t mismatches = 0;
  for (const Vec3& q : other) {
    const auto got = grid.nearest(q);
    const auto ref = oracle::nearest(pts, q);
    if (!got || got->index != ref.index || got->distance != ref.distance) ++mismatches;
  }
  check(mismatches == 0, "voxel nearest vs brute force");
  check(chamfer_distance(pts, other) == oracle::chamfer(pts, other), "chamfer vs brute force");
  std::string detail = fmt("hand examples and 10^4-point NN vs brute force: %zu NN mismatches", mismatches);
  for (const auto& f : failed) detail += "; failed: " + f;
  return {failed.empty(), detail};
}

// ---- determinism ---------------------------------------------------------------------

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    if (rel.filename().string().starts_with(".")) continue;
    if (!fs::exists(b / rel) || io::read_file(e.path()) != io::read_file(b / rel)) {
      why = "differs: " + rel.string();
      return false;
    }
    ++files;
  }
  if (files == 0) {
    why = "no files under " + a.string();
    return false;
  }
  return true;
}

#ifdef HSPLAT_WITH_CLI
struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli_run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"hsplat"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Outcome determinism(const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto p = [&](const std::string& s) { return (dir / s).string(); };
  std::vector<std::string> problems;
  const auto need = [&](const CliRun& r, const char* what) {
    if (r.code != 0) problems.push_back(std::string(what) + ": " + r.err);
    return r;
  };
  const std::vector<std::string> synth_args{"synth", "--recipe", "moving-box", "--seed", "5", "--camera-width", "64",
                                            "--camera-height", "48", "--lidar-channels", "16", "--lidar-cols", "128",
                                            "--train-views", "4", "--test-views", "2", "--out"};
  auto args = synth_args;
  args.push_back(p("data_a"));
  need(cli_run(args), "synth a");
  args = synth_args;
  args.push_back(p("data_b"));
  need(cli_run(args), "synth b");
  std::string why;
  if (problems.empty() && !same_tree(dir / "data_a", dir / "data_b", why)) problems.push_back("synth " + why);

  for (const char* tag : {"a", "b"}) {
    need(cli_run({"fit", "--manifest", p("data_a/manifest.txt"), "--out", p(std::string("fit_") + tag + ".hsplat"),
                  "--set", "iterations=60", "--max-points", "800", "--init-seed", "2"}),
         "fit");
  }
  if (problems.empty()) {
    if (io::read_file(p("fit_a.hsplat")) != io::read_file(p("fit_b.hsplat"))) problems.push_back("fit scenes differ");
    if (io::read_file(p("fit_a.log")) != io::read_file(p("fit_b.log"))) problems.push_back("fit logs differ");
  }

  std::vector<std::string> reports;
  for (const char* threads : {"1", "3"}) {
    const std::string out = p(std::string("renders_t") + threads);
    for (const char* cmd : {"render-camera", "render-lidar"}) {
      need(cli_run({"--threads", threads, cmd, "--scene", p("fit_a.hsplat"), "--manifest", p("data_a/manifest.txt"),
                    "--out", out, "--split", "all"}),
           cmd);
    }
    reports.push_back(need(cli_run({"--threads", threads, "eval", "--manifest", p("data_a/manifest.txt"), "--scene",
                                    p("fit_a.hsplat")}),
                           "eval")
                          .out);
  }
  if (problems.empty() && !same_tree(dir / "renders_t1", dir / "renders_t3", why)) {
    problems.push_back("renders across thread counts " + why);
  }
  if (problems.empty() && reports[0] != reports[1]) problems.push_back("eval reports differ");
  std::string detail = "synth/fit/eval bitwise repeatable, renders identical with 1 and 3 threads";
  for (const auto& s : problems) detail += "; " + s;
  return {problems.empty(), detail};
}
#else
Outcome determinism(const fs::path&) { return {false, "built without the command-line tool"}; }
#endif

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "hsplat_acceptance";
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      only.emplace_back(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--workdir DIR] [--only NAME]...\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"raster_oracle", raster_oracle},
      {"trace_oracle", trace_oracle},
      {"gradients", gradients},
      {"cross_path", cross_path},
      {"plane_fit", plane_fit},
      {"moving_box_fit", moving_box_fit},
      {"raster_vs_trace_ablation", ablation},
      {"metrics", metrics},
      {"determinism", [&] { return determinism(work); }},
  };

  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
