#include <benchmark/benchmark.h>

#include "hsplat/metrics.hpp"
#include "hsplat/random.hpp"
#include "hsplat/ssim.hpp"

using namespace hsplat;

namespace {

std::vector<Vec3> cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> p(n);
  for (Vec3& v : p) v = Vec3(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -1, 1));
  return p;
}

void BM_Chamfer(benchmark::State& state) {
  const auto a = cloud(static_cast<std::size_t>(state.range(0)), 1);
  const auto b = cloud(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_distance(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}
BENCHMARK(BM_Chamfer)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  Rng rng(3);
  Image x(320, 240, 3), y(320, 240, 3);
  for (double& v : x.data) v = uniform01(rng);
  for (double& v : y.data) v = uniform01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(x, y));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

}  // namespace
