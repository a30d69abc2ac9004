#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hsplat/bvh.hpp"
#include "hsplat/lidar.hpp"
#include "hsplat/parallel.hpp"
#include "hsplat/raytracer.hpp"
#include "hsplat/sh.hpp"
#include "support/expect_error.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace hsplat;

namespace {

// Splat in the plane x = c.x(), facing the x axis.
Gaussian2D wall_splat(const Vec3& c, double s, double opacity, double intensity = 0.5, double raydrop = 0.5) {
  Gaussian2D g = Gaussian2D::zeros({});
  g.center = c;
  g.tangent_u = Vec3::UnitY();
  g.tangent_v = Vec3::UnitZ();
  g.log_scale_u = g.log_scale_v = std::log(s);
  g.opacity_logit = logit(opacity);
  g.sh_intensity.at(0, 0) = logit(intensity) / kShC0;
  g.sh_raydrop.at(0, 0) = logit(raydrop) / kShC0;
  return g;
}

RayBundle single_ray(const Vec3& origin, const Vec3& dir) {
  RayBundle b;
  b.rows = 1;
  b.cols = 1;
  b.rays.push_back({origin, dir.normalized()});
  return b;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double range_diff(const RangeImage& a, const RangeImage& b) {
  return std::max({max_abs_diff(a.depth, b.depth), max_abs_diff(a.intensity, b.intensity),
                   max_abs_diff(a.raydrop, b.raydrop), max_abs_diff(a.alpha, b.alpha)});
}

std::vector<Gaussian2D> unpack(std::span<const double> p, std::span<const Gaussian2D> like) {
  const ParamLayout layout(like.front().degrees());
  ParamBuffer buf(like.size(), layout);
  std::copy(p.begin(), p.end(), buf.values().begin());
  std::vector<Gaussian2D> out(like.begin(), like.end());
  buf.unpack_into(out);
  return out;
}

LidarModel hand_lidar(std::vector<double> elevations, int cols, double az_min, double az_max) {
  LidarModel l;
  l.channels = static_cast<int>(elevations.size());
  l.elevations = std::move(elevations);
  l.azimuth_steps = cols;
  l.azimuth_min = az_min;
  l.azimuth_max = az_max;
  l.poses.push_back(RigidPose{});
  return l;
}

}  // namespace

TEST(BuildBvh, OneSplatTwoTrianglesOneLeaf) {
  const std::vector<Gaussian2D> prims{wall_splat({5, 0, 0}, 0.2, 0.5)};
  const TraceScene s = TraceScene::build(prims);
  ASSERT_EQ(s.proxies.size(), 2u);
  ASSERT_EQ(s.bvh.nodes().size(), 1u);
  Aabb box = s.proxies[0].bounds();
  box.expand(s.proxies[1].bounds());
  EXPECT_EQ(s.bvh.nodes()[0].box.lo, box.lo);
  EXPECT_EQ(s.bvh.nodes()[0].box.hi, box.hi);
  // The proxy square spans +-3 sigma in the tangent plane.
  EXPECT_NEAR(box.hi.y() - box.lo.y(), 6 * 0.2, 1e-12);
  EXPECT_NEAR(box.hi.x() - box.lo.x(), 0.0, 1e-12);
}

TEST(BuildBvh, TwoSeparatedSplatsRootIsUnion) {
  std::vector<Gaussian2D> prims;
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 3; ++k) prims.push_back(wall_splat({5.0 + 40 * i, 0.1 * k, 0}, 0.2, 0.5));
  }
  const TraceScene s = TraceScene::build(prims);
  const auto& nodes = s.bvh.nodes();
  ASSERT_FALSE(nodes[0].leaf());
  Aabb u = nodes[1].box;
  u.expand(nodes[nodes[0].first].box);
  EXPECT_EQ(nodes[0].box.lo, u.lo);
  EXPECT_EQ(nodes[0].box.hi, u.hi);
  s.bvh.validate(s.proxies);
}

TEST(BuildBvh, EmptySetGivesNoHits) {
  const TraceScene s = TraceScene::build({});
  EXPECT_TRUE(s.bvh.empty());
  const RangeImage ri = trace({}, single_ray(Vec3::Zero(), Vec3::UnitX()));
  EXPECT_EQ(ri.alpha[0], 0.0);
  EXPECT_EQ(ri.depth[0], 0.0);
}

TEST(BuildBvh, QueriesMatchBruteForce) {
  Rng rng(31);
  for (std::size_t n : {1000u, 10000u}) {
    const auto prims = hsplat::testing::random_shell_scene(rng, n, Vec3::Zero(), 2.0, 12.0, 3.0);
    const TraceScene s = TraceScene::build(prims);
    s.bvh.validate(s.proxies);
    EXPECT_LE(s.bvh.height(), Bvh::kMaxDepth);
    const RayBundle rays = generate_rays(hsplat::testing::test_lidar(16, 64, Vec3::Zero()), 0.0);
    for (const Ray& ray : rays.rays) {
      std::vector<std::uint32_t> brute;
      for (std::uint32_t t = 0; t < s.proxies.size(); ++t) {
        if (intersect_triangle(ray, s.proxies[t], 0.0, 1e30)) brute.push_back(t);
      }
      ASSERT_EQ(s.bvh.intersect_all(ray, s.proxies, 0.0, 1e30), brute);
    }
  }
}

TEST(BuildBvh, IsDeterministic) {
  Rng rng(32);
  const auto prims = hsplat::testing::random_shell_scene(rng, 500, Vec3::Zero(), 2.0, 6.0, 1.0);
  const TraceScene a = TraceScene::build(prims), b = TraceScene::build(prims);
  EXPECT_EQ(a.bvh.triangle_order(), b.bvh.triangle_order());
  ASSERT_EQ(a.bvh.nodes().size(), b.bvh.nodes().size());
  for (std::size_t i = 0; i < a.bvh.nodes().size(); ++i) EXPECT_EQ(a.bvh.nodes()[i].first, b.bvh.nodes()[i].first);
}

TEST(GenerateRays, ForwardLeftAndUp) {
  const LidarModel l = hand_lidar({std::numbers::pi / 6, 0.0}, 4, 0.0, 2 * std::numbers::pi);
  const RayBundle rays = generate_rays(l, 0.0);
  ASSERT_EQ(rays.rays.size(), 8u);
  EXPECT_NEAR((rays.rays[4].direction - Vec3(1, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((rays.rays[5].direction - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((rays.rays[0].direction - Vec3(0.8660254037844386, 0, 0.5)).norm(), 0.0, 1e-12);
}

TEST(GenerateRays, FollowsSensorPose) {
  LidarModel l = hand_lidar({0.0}, 4, 0.0, 2 * std::numbers::pi);
  l.poses[0].translation = Vec3(1, 2, 3);
  l.poses[0].rotation = Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()));
  const RayBundle rays = generate_rays(l, 0.0);
  EXPECT_EQ(rays.rays[0].origin, Vec3(1, 2, 3));
  EXPECT_NEAR((rays.rays[0].direction - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(GenerateRays, OutOfRangeTime) {
  LidarModel l = hand_lidar({0.0}, 4, 0.0, 2 * std::numbers::pi);
  l.poses[0].timestamp = 1.0;
  EXPECT_HSPLAT_ERROR(generate_rays(l, 2.0), ErrorCode::OutOfRange);
}

TEST(IntersectRaySplat, HeadOn) {
  const auto hit = intersect_ray_splat({Vec3::Zero(), Vec3::UnitX()}, wall_splat({5, 0, 0}, 0.3, 0.5));
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->depth, 5.0, 1e-12);
  EXPECT_NEAR(hit->local.u, 0.0, 1e-12);
  EXPECT_NEAR(hit->local.v, 0.0, 1e-12);
}

TEST(IntersectRaySplat, OneScaledUnitOff) {
  const auto hit = intersect_ray_splat({Vec3::Zero(), Vec3::UnitX()}, wall_splat({5, 0.3, 0}, 0.3, 0.5));
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->local.u, -1.0, 1e-12);
  EXPECT_NEAR(gaussian_value(hit->local), std::exp(-0.5), 1e-12);
}

TEST(IntersectRaySplat, MissesWhenParallelBehindOrOutside) {
  Gaussian2D g = wall_splat({5, 0, 0}, 0.3, 0.5);
  g.tangent_u = Vec3::UnitX();  // plane y = 0 contains the ray
  g.tangent_v = Vec3::UnitZ();
  EXPECT_FALSE(intersect_ray_splat({Vec3::Zero(), Vec3::UnitX()}, g));
  EXPECT_FALSE(intersect_ray_splat({Vec3::Zero(), -Vec3::UnitX()}, wall_splat({5, 0, 0}, 0.3, 0.5)));
  EXPECT_FALSE(intersect_ray_splat({Vec3::Zero(), Vec3::UnitX()}, wall_splat({5, 1.0, 0}, 0.3, 0.5)));
  EXPECT_FALSE(intersect_ray_splat({Vec3::Zero(), Vec3::UnitX()}, wall_splat({5, 0, 0}, 0.3, 0.5), 4.0));
}

TEST(Trace, SingleSplatOneTerm) {
  const std::vector<Gaussian2D> prims{wall_splat({5, 0, 0}, 0.3, 0.8, 0.6, 0.1)};
  const RangeImage ri = trace(prims, single_ray(Vec3::Zero(), Vec3::UnitX()));
  EXPECT_NEAR(ri.depth[0], 4.0, 1e-12);
  EXPECT_NEAR(ri.intensity[0], 0.48, 1e-12);
  EXPECT_NEAR(ri.raydrop[0], 0.08, 1e-12);
  EXPECT_NEAR(ri.alpha[0], 0.8, 1e-12);
}

TEST(Trace, TwoSplatsFrontToBack) {
  const std::vector<Gaussian2D> prims{wall_splat({10, 0, 0}, 0.3, 0.5), wall_splat({5, 0, 0}, 0.3, 0.5)};
  const RangeImage ri = trace(prims, single_ray(Vec3::Zero(), Vec3::UnitX()));
  EXPECT_NEAR(ri.depth[0], 0.5 * 5 + 0.25 * 10, 1e-12);
  EXPECT_NEAR(ri.alpha[0], 0.75, 1e-12);
}

TEST(Trace, MatchesGlobalSortOracleForEveryK) {
  Rng rng(33);
  const RayBundle rays = generate_rays(hsplat::testing::test_lidar(16, 64, Vec3::Zero()), 0.0);
  for (int scene = 0; scene < 3; ++scene) {
    const auto prims = hsplat::testing::random_shell_scene(rng, 200, Vec3::Zero(), 2.0, 5.0, 1.5);
    const RangeImage ref = oracle::trace(prims, rays);
    for (int k : {1, 2, 8, 16}) {
      TraceSettings s;
      s.k = k;
      EXPECT_LE(range_diff(trace(prims, rays, s), ref), 1e-6) << "k=" << k;
    }
  }
}

TEST(Trace, WeightsSumToOneMinusTransmittance) {
  Rng rng(34);
  auto prims = hsplat::testing::random_shell_scene(rng, 300, Vec3::Zero(), 2.0, 5.0, 1.5);
  for (Gaussian2D& g : prims) {
    std::fill(g.sh_intensity.data().begin(), g.sh_intensity.data().end(), 0.0);
    g.sh_intensity.at(0, 0) = 60.0 / kShC0;  // decodes to exactly 1
  }
  const RangeImage ri = trace(prims, generate_rays(hsplat::testing::test_lidar(16, 64, Vec3::Zero()), 0.0));
  for (std::size_t i = 0; i < ri.cells(); ++i) {
    EXPECT_NEAR(ri.intensity[i], ri.alpha[i], 1e-9);
    EXPECT_LE(ri.alpha[i], 1.0);
  }
}

TEST(Trace, OpaqueTiledPlaneGivesPlaneDistance) {
  const double d = 8.0;
  std::vector<Gaussian2D> prims;
  for (int i = -20; i <= 20; ++i) {
    for (int j = -20; j <= 20; ++j) {
      Gaussian2D g = wall_splat({d, 0.1 * i, 0.1 * j}, 0.1, 0.5);
      g.opacity_logit = 12.0;
      prims.push_back(g);
    }
  }
  const RayBundle rays = generate_rays(hand_lidar({0.1, 0.0, -0.1}, 16, -0.2, 0.2), 0.0);
  const RangeImage ri = trace(prims, rays);
  // Depth runs along the ray; its x component is the plane distance.
  for (std::size_t c = 0; c < ri.cells(); ++c) {
    EXPECT_NEAR(ri.alpha[c], 1.0, 1e-3);
    EXPECT_NEAR(ri.depth[c] * rays.rays[c].direction.x(), d, 1e-3 * d);
  }
}

TEST(Trace, ThreadCountIndependent) {
  Rng rng(35);
  const auto prims = hsplat::testing::random_shell_scene(rng, 400, Vec3::Zero(), 2.0, 5.0, 1.5);
  const RayBundle rays = generate_rays(hsplat::testing::test_lidar(16, 64, Vec3::Zero()), 0.0);
  const int saved = thread_count();
  set_thread_count(1);
  const RangeImage a = trace(prims, rays);
  set_thread_count(4);
  const RangeImage b = trace(prims, rays);
  set_thread_count(saved);
  EXPECT_EQ(a.depth, b.depth);
  EXPECT_EQ(a.intensity, b.intensity);
  EXPECT_EQ(a.raydrop, b.raydrop);
  EXPECT_EQ(a.alpha, b.alpha);
}

TEST(TraceBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(36);
  const auto prims = hsplat::testing::random_shell_scene(rng, 20, Vec3::Zero(), 2.0, 4.0, 0.5);
  const RayBundle rays = generate_rays(hsplat::testing::test_lidar(8, 32, Vec3::Zero()), 0.0);
  RayTracer t;
  t.forward(prims, TraceScene::build(prims), rays);
  const GradientBuffer g = t.backward(prims, RangeImageGrad(8, 32));
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(TraceBackward, RequiresForwardState) {
  RayTracer t;
  const std::vector<Gaussian2D> prims{wall_splat({5, 0, 0}, 0.3, 0.5)};
  EXPECT_HSPLAT_ERROR(t.backward(prims, RangeImageGrad(1, 1)), ErrorCode::ContractViolation);
}

TEST(TraceBackward, DepthGradientAlongRay) {
  const std::vector<Gaussian2D> prims{wall_splat({5, 0.05, -0.02}, 0.3, 0.7)};
  const RayBundle rays = single_ray(Vec3::Zero(), Vec3::UnitX());
  RayTracer t;
  t.forward(prims, TraceScene::build(prims), rays);
  RangeImageGrad up(1, 1);
  up.depth[0] = 1.0;
  const double analytic = t.backward(prims, up).row(0)[ParamLayout::kCenter];
  auto depth = [&](double x) {
    std::vector<Gaussian2D> g = prims;
    g[0].center.x() = x;
    return trace(g, rays).depth[0];
  };
  const double fd = (depth(5 + 1e-4) - depth(5 - 1e-4)) / 2e-4;
  EXPECT_NEAR(analytic, fd, std::max(1e-6, 1e-3 * std::abs(fd)));
}

TEST(TraceBackward, TwentySplatSumOfChannels) {
  Rng rng(37);
  hsplat::testing::SplatRanges ranges;
  ranges.log_scale_min = std::log(0.3);
  ranges.log_scale_max = std::log(0.8);
  const auto prims = hsplat::testing::random_shell_scene(rng, 20, Vec3::Zero(), 2.0, 4.0, 0.5, ranges);
  const RayBundle rays = generate_rays(hsplat::testing::test_lidar(8, 32, Vec3::Zero()), 0.0);
  RangeImageGrad up(8, 32);
  std::fill(up.depth.begin(), up.depth.end(), 1.0);
  std::fill(up.intensity.begin(), up.intensity.end(), 1.0);
  std::fill(up.raydrop.begin(), up.raydrop.end(), 1.0);
  RayTracer t;
  t.forward(prims, TraceScene::build(prims), rays);
  const std::vector<double> analytic = t.backward(prims, up).values();
  auto f = [&](std::span<const double> p) {
    const RangeImage ri = trace(unpack(p, prims), rays);
    double l = 0.0;
    for (std::size_t i = 0; i < ri.cells(); ++i) l += ri.depth[i] + ri.intensity[i] + ri.raydrop[i];
    return l;
  };
  const ParamLayout layout(prims.front().degrees());
  const auto res =
      hsplat::testing::compare_gradients(analytic, f, ParamBuffer::pack(prims, layout).values(), layout, {});
  EXPECT_GE(res.pass_rate(), 0.99) << res.worst;
  EXPECT_GT(res.nonzero, 0u);
}

TEST(ExtractPointCloud, AllDroppedIsEmpty) {
  const LidarModel l = hand_lidar({0.0}, 4, 0.0, 2 * std::numbers::pi);
  RangeImage ri(1, 4);
  std::fill(ri.depth.begin(), ri.depth.end(), 3.0);
  std::fill(ri.alpha.begin(), ri.alpha.end(), 1.0);
  std::fill(ri.raydrop.begin(), ri.raydrop.end(), 1.0);
  EXPECT_TRUE(extract_point_cloud(ri, l, 0.0).empty());
}

TEST(ExtractPointCloud, SingleValidCell) {
  const LidarModel l = hand_lidar({0.0}, 4, 0.0, 2 * std::numbers::pi);
  RangeImage ri(1, 4);
  ri.depth[0] = 4.0;
  ri.alpha[0] = 1.0;
  ri.intensity[0] = 0.3;
  const PointCloud pc = extract_point_cloud(ri, l, 0.0);
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_NEAR((pc.points[0] - Vec3(4, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_EQ(pc.intensity[0], 0.3);
}

TEST(ExtractPointCloud, PartialCoverageIsRenormalized) {
  const LidarModel l = hand_lidar({0.0}, 4, 0.0, 2 * std::numbers::pi);
  RangeImage ri(1, 4);
  ri.depth[0] = 3.2;
  ri.alpha[0] = 0.8;
  const PointCloud pc = extract_point_cloud(ri, l, 0.0);
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_NEAR((pc.points[0] - Vec3(4, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(ExtractPointCloud, ShapeMismatchThrows) {
  const LidarModel l = hand_lidar({0.0}, 4, 0.0, 2 * std::numbers::pi);
  EXPECT_HSPLAT_ERROR(extract_point_cloud(RangeImage(2, 4), l, 0.0), ErrorCode::ShapeMismatch);
}

TEST(ExtractPointCloud, PlaneSceneLandsOnPlane) {
  std::vector<Gaussian2D> prims;
  for (int i = -30; i <= 30; ++i) {
    for (int j = -15; j <= 15; ++j) prims.push_back(wall_splat({6.0, 0.1 * i, 0.1 * j}, 0.08, 0.9, 0.5, 0.02));
  }
  const LidarModel l = hand_lidar(LidarModel::uniform_elevations(12, 0.15, -0.15), 64, -0.4, 0.4);
  const RangeImage ri = trace(prims, generate_rays(l, 0.0));
  const PointCloud pc = extract_point_cloud(ri, l, 0.0);
  ASSERT_GT(pc.size(), 600u);
  for (const Vec3& p : pc.points) EXPECT_NEAR(p.x(), 6.0, 1e-3);
}
