#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "hsplat/error.hpp"
#include "hsplat/evaluate.hpp"
#include "hsplat/init.hpp"
#include "hsplat/io/atomic_file.hpp"
#include "hsplat/io/config.hpp"
#include "hsplat/io/manifest.hpp"
#include "hsplat/io/planar_image.hpp"
#include "hsplat/io/ply.hpp"
#include "hsplat/io/png_image.hpp"
#include "hsplat/io/report.hpp"
#include "hsplat/io/scene_file.hpp"
#include "hsplat/loss.hpp"
#include "hsplat/parallel.hpp"
#include "hsplat/rasterizer.hpp"
#include "hsplat/raytracer.hpp"
#include "hsplat/synthetic.hpp"
#include "hsplat/trainer.hpp"

namespace hsplat::cli {
namespace fs = std::filesystem;
namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

bool wanted(const std::string& split, const std::string& entry_split) {
  return split == "all" || split == entry_split;
}

void check_split(const std::string& split) {
  require(split == "train" || split == "test" || split == "all", ErrorCode::InvalidArgument,
          "split must be train, test or all");
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  SyntheticOptions options;
  std::string out;
};

void run_synth(const SynthArgs& a, std::ostream& out) {
  const SyntheticData data = generate_synthetic(a.options);
  fs::create_directories(a.out);
  const io::DatasetManifest m = write_synthetic(data, a.out);
  out << "recipe=" << data.recipe << "\n"
      << "primitives=" << data.scene.primitive_count() << "\n"
      << "cameras=" << m.cameras.size() << "\n"
      << "lidars=" << m.lidars.size() << "\n"
      << "manifest=" << (fs::path(a.out) / "manifest.txt").string() << "\n";
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string manifest;
  std::string out;
  std::string config;
  std::string init;
  std::string log;
  double jitter = 0.0;
  std::uint64_t init_seed = 0;
  std::size_t max_points = 0;
  std::vector<std::string> overrides;
};

SceneGraph initial_from_lidar(const Dataset& data, const InitOptions& opts) {
  std::vector<Vec3> points;
  std::vector<double> intensity;
  for (const LidarFrame& f : data.lidars) {
    const PointCloud c = extract_point_cloud(f.target, f.lidar, f.timestamp);
    points.insert(points.end(), c.points.begin(), c.points.end());
    for (double v : c.intensity) intensity.push_back(std::clamp(v, 0.0, 1.0));
  }
  require(!points.empty(), ErrorCode::EmptyInput,
          "fit: no LiDAR returns to initialize from (pass --init with a scene file)");
  SceneGraph graph(opts.degrees);
  graph.background().primitives = init_from_points(points, {}, intensity, opts);
  return graph;
}

void run_fit(const FitArgs& a, std::ostream& out) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : io::load_train_config(a.config);
  if (!a.overrides.empty()) {
    std::string text;
    for (const std::string& kv : a.overrides) text += kv + "\n";
    io::apply_config(io::parse_key_values(text), cfg);
  }
  const io::DatasetManifest m = io::load_manifest(a.manifest);
  const Dataset data = io::load_dataset(m, "train");

  SceneGraph init;
  if (!a.init.empty()) {
    init = io::load_scene(a.init);
  } else {
    InitOptions opts;
    opts.max_points = a.max_points;
    opts.seed = a.init_seed;
    init = initial_from_lidar(data, opts);
  }
  if (a.jitter > 0.0) init = jitter_centers(init, a.jitter, a.init_seed);

  const FitResult result = fit(init, data, cfg);
  io::save_scene(a.out, result.scene);
  const fs::path log_path = a.log.empty() ? fs::path(a.out).replace_extension(".log") : fs::path(a.log);
  io::write_text_atomic(log_path, result.log.to_text());
  const double last = result.log.entries.empty() ? 0.0 : result.log.entries.back().loss.total;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", last);
  out << "iterations=" << result.log.entries.size() << "\n"
      << "primitives=" << result.scene.primitive_count() << "\n"
      << "final_loss=" << buf << "\n"
      << "scene=" << a.out << "\n"
      << "log=" << log_path.string() << "\n";
}

// ---- render-camera / render-lidar ------------------------------------------

struct RenderArgs {
  std::string scene;
  std::string manifest;
  std::string out;
  std::string split = "test";
  bool ascii_ply = false;
};

void run_render_camera(const RenderArgs& a, std::ostream& out) {
  check_split(a.split);
  const SceneGraph scene = io::load_scene(a.scene);
  const io::DatasetManifest m = io::load_manifest(a.manifest);
  io::DirectoryLock lock(a.out);
  Rasterizer raster;
  std::size_t n = 0;
  for (const io::CameraEntry& c : m.cameras) {
    if (!wanted(a.split, c.split)) continue;
    const FlatScene flat = flatten(scene, c.timestamp);
    const FrameBuffer fb = raster.forward(flat.primitives, c.camera);
    const fs::path stem = c.image.stem();
    io::write_png(fs::path(a.out) / "images" / (stem.string() + ".png"), color_image(fb));
    io::save_planar(fs::path(a.out) / "depth" / (stem.string() + ".hsimg"), io::camera_depth_planes(fb));
    ++n;
  }
  out << "rendered_cameras=" << n << "\n";
}

void run_render_lidar(const RenderArgs& a, std::ostream& out) {
  check_split(a.split);
  const SceneGraph scene = io::load_scene(a.scene);
  const io::DatasetManifest m = io::load_manifest(a.manifest);
  io::DirectoryLock lock(a.out);
  std::size_t n = 0, points = 0;
  for (const io::LidarEntry& l : m.lidars) {
    if (!wanted(a.split, l.split)) continue;
    const FlatScene flat = flatten(scene, l.timestamp);
    const RangeImage ri = trace(flat.primitives, generate_rays(l.lidar, l.timestamp));
    const std::string stem = l.range.stem().string();
    io::save_planar(fs::path(a.out) / "lidar" / (stem + ".hsimg"), io::range_image_planes(ri));
    const PointCloud cloud = extract_point_cloud(ri, l.lidar, l.timestamp);
    io::write_ply(fs::path(a.out) / "clouds" / (stem + ".ply"), cloud,
                  a.ascii_ply ? io::PlyEncoding::Ascii : io::PlyEncoding::BinaryLittleEndian);
    points += cloud.size();
    ++n;
  }
  out << "rendered_sweeps=" << n << "\n" << "points=" << points << "\n";
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string manifest;
  std::string scene;
  std::string renders;
  std::string split = "test";
  std::string json;
  double f_tau = 0.05;
  int crop_node = -1;
  double crop_margin = 0.15;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  check_split(a.split);
  require(a.scene.empty() != a.renders.empty(), ErrorCode::InvalidArgument,
          "eval needs exactly one of --scene or --renders");
  const io::DatasetManifest m = io::load_manifest(a.manifest);
  const Dataset data = io::load_dataset(m, a.split);
  if (data.empty()) fail(ErrorCode::EmptyInput, "eval: no observations in split '" + a.split + "'");

  EvalSettings settings;
  settings.f_tau = a.f_tau;
  require(a.crop_node < 0 || !a.scene.empty(), ErrorCode::InvalidArgument, "--crop-node needs --scene");

  MetricReport report;
  if (!a.scene.empty()) {
    if (a.crop_node >= 0) {
      settings.crop_node = static_cast<std::size_t>(a.crop_node);
      settings.crop_margin = a.crop_margin;
    }
    report = evaluate_scene(io::load_scene(a.scene), data, settings);
  } else {
    EvalAccumulator acc(settings);
    for (const io::CameraEntry& c : m.cameras) {
      if (!wanted(a.split, c.split)) continue;
      const Image pred = io::read_png(fs::path(a.renders) / "images" / (c.image.stem().string() + ".png"));
      acc.add_camera(pred, io::read_png(c.image));
    }
    for (const io::LidarEntry& l : m.lidars) {
      if (!wanted(a.split, l.split)) continue;
      const RangeImage pred =
          io::range_image_from_planes(io::load_planar(fs::path(a.renders) / "lidar" / (l.range.stem().string() + ".hsimg")));
      acc.add_lidar(pred, io::range_image_from_planes(io::load_planar(l.range)), l.lidar, l.timestamp);
    }
    report = acc.report();
  }
  out << io::report_key_values(report);
  if (!a.json.empty()) io::write_text_atomic(a.json, io::report_json(report));
}

// ---- inspect --------------------------------------------------------------

void run_inspect(const std::string& path, std::ostream& out) {
  const SceneGraph g = io::load_scene(path);
  const ParamLayout layout(g.degrees);
  out << "scene " << path << "\n"
      << "sh_degrees color=" << g.degrees.color << " intensity=" << g.degrees.intensity
      << " raydrop=" << g.degrees.raydrop << " stride=" << layout.stride << "\n"
      << "keyframes " << g.keyframes.size();
  if (!g.keyframes.empty()) out << " [" << g.keyframes.front() << ", " << g.keyframes.back() << "]";
  out << "\n"
      << "nodes " << g.nodes.size() << "\n"
      << "primitives " << g.primitive_count() << "\n";
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const SceneNode& node = g.nodes[n];
    out << "  node " << n << " kind=" << to_string(node.kind) << " name=" << quoted(node.name)
        << " primitives=" << node.primitives.size() << " poses=" << node.poses.size()
        << " deform_keyframes=" << node.deform.size();
    if (!node.primitives.empty()) {
      Aabb box;
      double opacity = 0.0;
      for (const Gaussian2D& p : node.primitives) {
        box.expand(p.center);
        opacity += activate(p).opacity;
      }
      char buf[200];
      std::snprintf(buf, sizeof(buf), " bounds=[%.4g,%.4g,%.4g]..[%.4g,%.4g,%.4g] mean_opacity=%.4g", box.lo.x(),
                    box.lo.y(), box.lo.z(), box.hi.x(), box.hi.y(), box.hi.z(),
                    opacity / static_cast<double>(node.primitives.size()));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hsplat: hybrid Gaussian surfel renderer for camera and LiDAR"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hsplat 0.3.0");
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--recipe", synth.options.recipe, "textured-plane | box-room | moving-box | walker")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.options.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--camera-width", synth.options.camera_width)->capture_default_str();
  synth_cmd->add_option("--camera-height", synth.options.camera_height)->capture_default_str();
  synth_cmd->add_option("--lidar-channels", synth.options.lidar_channels)->capture_default_str();
  synth_cmd->add_option("--lidar-cols", synth.options.lidar_cols)->capture_default_str();
  synth_cmd->add_option("--train-views", synth.options.train_views)->capture_default_str();
  synth_cmd->add_option("--test-views", synth.options.test_views)->capture_default_str();
  synth_cmd->add_option("--spacing", synth.options.spacing, "splat spacing in meters (0: recipe default)");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "fit a scene to the training split of a manifest");
  fit_cmd->add_option("--manifest", fit_args.manifest)->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit_args.out, "fitted scene file")->required();
  fit_cmd->add_option("--config", fit_args.config, "key=value training config")->check(CLI::ExistingFile);
  fit_cmd->add_option("--set", fit_args.overrides, "config override key=value (repeatable)");
  fit_cmd->add_option("--init", fit_args.init, "initial scene (default: from LiDAR returns)")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--jitter", fit_args.jitter, "std-dev of center noise added to the initial scene");
  fit_cmd->add_option("--init-seed", fit_args.init_seed);
  fit_cmd->add_option("--max-points", fit_args.max_points, "subsample LiDAR points for the initial scene");
  fit_cmd->add_option("--log", fit_args.log, "loss log path (default: <out>.log)");

  RenderArgs cam_args;
  auto* cam_cmd = app.add_subcommand("render-camera", "render PNG color and float depth per camera entry");
  RenderArgs lidar_args;
  auto* lidar_cmd = app.add_subcommand("render-lidar", "render range images and PLY clouds per LiDAR entry");
  for (auto [cmd, args] : {std::pair{cam_cmd, &cam_args}, std::pair{lidar_cmd, &lidar_args}}) {
    cmd->add_option("--scene", args->scene)->required()->check(CLI::ExistingFile);
    cmd->add_option("--manifest", args->manifest)->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", args->out, "output directory")->required();
    cmd->add_option("--split", args->split, "train | test | all")->capture_default_str();
  }
  lidar_cmd->add_flag("--ascii-ply", lidar_args.ascii_ply, "write ascii PLY instead of binary");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "compare a scene or rendered files against a manifest split");
  eval_cmd->add_option("--manifest", eval_args.manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--scene", eval_args.scene, "render this scene")->check(CLI::ExistingFile);
  eval_cmd->add_option("--renders", eval_args.renders, "directory written by render-camera / render-lidar");
  eval_cmd->add_option("--split", eval_args.split)->capture_default_str();
  eval_cmd->add_option("--json", eval_args.json, "also write the report as JSON");
  eval_cmd->add_option("--f-tau", eval_args.f_tau, "F-score distance threshold")->capture_default_str();
  eval_cmd->add_option("--crop-node", eval_args.crop_node, "restrict clouds to one node's box (needs --scene)");
  eval_cmd->add_option("--crop-margin", eval_args.crop_margin)->capture_default_str();

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "print a scene summary");
  inspect_cmd->add_option("scene", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "hsplat 0.3.0\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: code=usage message=" << quoted(e.what()) << "\n";
    return 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    if (*synth_cmd) run_synth(synth, out);
    if (*fit_cmd) run_fit(fit_args, out);
    if (*cam_cmd) run_render_camera(cam_args, out);
    if (*lidar_cmd) run_render_lidar(lidar_args, out);
    if (*eval_cmd) run_eval(eval_args, out);
    if (*inspect_cmd) run_inspect(inspect_path, out);
  } catch (const Error& e) {
    err << "error: code=" << to_string(e.code()) << " message=" << quoted(e.what()) << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: code=" << to_string(ErrorCode::Io) << " message=" << quoted(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: code=internal message=" << quoted(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hsplat::cli
