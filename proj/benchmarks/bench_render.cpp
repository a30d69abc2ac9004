#include <benchmark/benchmark.h>

#include <cmath>

#include "hsplat/bvh.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/random.hpp"
#include "hsplat/rasterizer.hpp"
#include "hsplat/raytracer.hpp"

using namespace hsplat;

namespace {

// Camera-facing splats spread over a 4 m wide slab 2 to 8 m in front of the origin.
std::vector<Gaussian2D> slab(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Gaussian2D> prims(n);
  for (Gaussian2D& g : prims) {
    g.center = Vec3(uniform(rng, -2, 2), uniform(rng, -1.5, 1.5), uniform(rng, 2, 8));
    g.log_scale_u = g.log_scale_v = std::log(uniform(rng, 0.02, 0.1));
    g.opacity_logit = 1.0;
  }
  return prims;
}

CameraModel camera(int w, int h) {
  CameraModel cam;
  cam.width = w;
  cam.height = h;
  cam.fx = cam.fy = 0.8 * w;
  cam.cx = 0.5 * w;
  cam.cy = 0.5 * h;
  return cam;
}

LidarModel lidar(int channels, int cols) {
  LidarModel l;
  l.channels = channels;
  l.azimuth_steps = cols;
  l.elevations = LidarModel::uniform_elevations(channels, 0.3, -0.3);
  l.azimuth_min = -0.6;
  l.azimuth_max = 0.6;
  RigidPose pose;
  // Sensor x axis along the camera-style +z of the slab.
  pose.rotation = Quat(Eigen::AngleAxisd(-0.5 * 3.14159265358979323846, Vec3::UnitY()));
  l.poses = {pose};
  return l;
}

void BM_RasterizeForward(benchmark::State& state) {
  const auto prims = slab(static_cast<std::size_t>(state.range(0)), 1);
  const CameraModel cam = camera(320, 240);
  Rasterizer r;
  for (auto _ : state) benchmark::DoNotOptimize(r.forward(prims, cam));
  state.SetItemsProcessed(state.iterations() * cam.width * cam.height);
}
BENCHMARK(BM_RasterizeForward)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_RasterizeBackward(benchmark::State& state) {
  const auto prims = slab(static_cast<std::size_t>(state.range(0)), 2);
  const CameraModel cam = camera(320, 240);
  Rasterizer r;
  r.forward(prims, cam);
  FrameBufferGrad up(cam.width, cam.height);
  std::fill(up.color.begin(), up.color.end(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(r.backward(prims, up));
}
BENCHMARK(BM_RasterizeBackward)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BvhBuild(benchmark::State& state) {
  const auto prims = slab(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(TraceScene::build(prims));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BvhBuild)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_TraceForward(benchmark::State& state) {
  const auto prims = slab(10000, 4);
  const TraceScene scene = TraceScene::build(prims);
  const RayBundle rays = generate_rays(lidar(32, 512), 0.0);
  TraceSettings ts;
  ts.k = static_cast<int>(state.range(0));
  RayTracer tracer(ts);
  for (auto _ : state) benchmark::DoNotOptimize(tracer.forward(prims, scene, rays));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rays.rays.size()));
}
BENCHMARK(BM_TraceForward)->Arg(1)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
