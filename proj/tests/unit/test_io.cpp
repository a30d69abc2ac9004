#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hsplat/io/atomic_file.hpp"
#include "hsplat/io/config.hpp"
#include "hsplat/io/manifest.hpp"
#include "hsplat/io/planar_image.hpp"
#include "hsplat/io/ply.hpp"
#include "hsplat/io/png_image.hpp"
#include "hsplat/io/report.hpp"
#include "hsplat/io/scene_file.hpp"
#include "support/expect_error.hpp"
#include "support/scenes.hpp"

using namespace hsplat;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("hsplat_io_") + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

SceneGraph random_scene(Rng& rng) {
  SceneGraph g(ShDegrees{3, 2, 1});
  g.keyframes = {0.0, 0.25, 1.0};
  for (int i = 0; i < 6; ++i) g.background().primitives.push_back(hsplat::testing::random_splat(rng, Vec3(i, 1, 2)));
  SceneNode rigid;
  rigid.kind = NodeKind::Rigid;
  rigid.name = "box";
  for (int i = 0; i < 3; ++i) rigid.primitives.push_back(hsplat::testing::random_splat(rng, Vec3(0, i, 0)));
  for (double t : g.keyframes) {
    RigidPose p;
    p.timestamp = t;
    p.rotation = Quat(hsplat::testing::random_rotation(rng));
    p.translation = Vec3(uniform01(rng), t, -t);
    rigid.poses.push_back(p);
  }
  SceneNode deform = rigid;
  deform.kind = NodeKind::Deformable;
  deform.name = "walker";
  for (std::size_t k = 0; k < g.keyframes.size(); ++k) {
    DeformKeyframe kf;
    for (int i = 0; i < 3; ++i) {
      kf.offsets.emplace_back(uniform01(rng), 0.1, -0.2);
      kf.rotations.emplace_back(hsplat::testing::random_rotation(rng));
    }
    deform.deform.push_back(kf);
  }
  g.nodes.push_back(rigid);
  g.nodes.push_back(deform);
  return g;
}

}  // namespace

TEST(SceneFile, RoundTripIsLossless) {
  Rng rng(81);
  const SceneGraph g = random_scene(rng);
  const auto bytes = io::serialize_scene(g);
  const SceneGraph back = io::parse_scene(bytes);
  EXPECT_EQ(io::serialize_scene(back), bytes);
  EXPECT_EQ(back.pack_parameters().values(), g.pack_parameters().values());
  ASSERT_EQ(back.nodes.size(), 3u);
  EXPECT_EQ(back.nodes[2].kind, NodeKind::Deformable);
  EXPECT_EQ(back.nodes[2].name, "walker");
  EXPECT_EQ(back.nodes[1].poses[2].translation, g.nodes[1].poses[2].translation);
  EXPECT_EQ(back.nodes[1].poses[2].rotation.coeffs(), g.nodes[1].poses[2].rotation.coeffs());
  EXPECT_EQ(back.nodes[2].deform[1].offsets, g.nodes[2].deform[1].offsets);
  EXPECT_EQ(back.keyframes, g.keyframes);
}

TEST(SceneFile, EmptySceneRoundTrips) {
  const SceneGraph g;
  const auto bytes = io::serialize_scene(g);
  const SceneGraph back = io::parse_scene(bytes);
  EXPECT_EQ(back.primitive_count(), 0u);
  EXPECT_EQ(io::serialize_scene(back), bytes);
}

TEST(SceneFile, RejectsBadMagicVersionAndCorruption) {
  Rng rng(82);
  const auto bytes = io::serialize_scene(random_scene(rng));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_HSPLAT_ERROR(io::parse_scene(bad), ErrorCode::Format);
  bad = bytes;
  bad[8] = 2;
  EXPECT_HSPLAT_ERROR(io::parse_scene(bad), ErrorCode::VersionMismatch);
  bad = bytes;
  bad[bytes.size() / 2] ^= 0x10;
  EXPECT_HSPLAT_ERROR(io::parse_scene(bad), ErrorCode::Format);
  bad.assign(bytes.begin(), bytes.begin() + 30);
  EXPECT_HSPLAT_ERROR(io::parse_scene(bad), ErrorCode::Format);
}

TEST(SceneFile, SaveLoadThroughDisk) {
  TempDir dir;
  Rng rng(83);
  const SceneGraph g = random_scene(rng);
  io::save_scene(dir.path() / "s.hsplat", g);
  EXPECT_EQ(io::serialize_scene(io::load_scene(dir.path() / "s.hsplat")), io::serialize_scene(g));
  EXPECT_HSPLAT_ERROR(io::load_scene(dir.path() / "missing.hsplat"), ErrorCode::Io);
}

TEST(PlanarImage, HeaderAndRoundTrip) {
  io::PlanarImage img;
  img.rows = 2;
  img.cols = 3;
  img.names = {"D", "A"};
  img.planes = {{1, 2, 3, 4, 5, 6}, {0.5f, 0.25f, 0, 1, 1, 1}};
  const auto bytes = io::serialize_planar(img);
  ASSERT_EQ(bytes.size(), 64u + 2 * 6 * 4);
  const std::string header(bytes.begin(), bytes.begin() + 64);
  EXPECT_EQ(header.rfind("HSPLIMG1 rows=2 cols=3 planes=D,A", 0), 0u);
  EXPECT_EQ(header.back(), '\n');
  const io::PlanarImage back = io::parse_planar(bytes);
  EXPECT_EQ(back.names, img.names);
  EXPECT_EQ(back.planes, img.planes);
  // Little-endian float32: 1.0f is 00 00 80 3f.
  EXPECT_EQ(bytes[64 + 2], 0x80);
  EXPECT_EQ(bytes[64 + 3], 0x3f);
}

TEST(PlanarImage, RangeImagePlanes) {
  RangeImage r(2, 2);
  r.depth = {1, 2, 3, 4};
  r.intensity = {0.1, 0.2, 0.3, 0.4};
  r.raydrop = {0, 1, 0, 1};
  r.alpha = {1, 0, 1, 0};
  const RangeImage back = io::range_image_from_planes(io::parse_planar(io::serialize_planar(io::range_image_planes(r))));
  EXPECT_EQ(back.depth, r.depth);
  EXPECT_EQ(back.raydrop, r.raydrop);
  EXPECT_NEAR(back.intensity[1], 0.2, 1e-7);
}

TEST(PlanarImage, RejectsMissingPlanesAndTruncation) {
  io::PlanarImage img;
  img.rows = 1;
  img.cols = 1;
  img.names = {"D"};
  img.planes = {{1}};
  EXPECT_THROW(io::range_image_from_planes(img), Error);
  auto bytes = io::serialize_planar(img);
  bytes.pop_back();
  EXPECT_HSPLAT_ERROR(io::parse_planar(bytes), ErrorCode::Format);
}

TEST(Png, RoundTripQuantizesToEightBits) {
  TempDir dir;
  Rng rng(84);
  Image img(7, 5, 3);
  for (double& v : img.data) v = uniform01(rng);
  io::write_png(dir.path() / "a.png", img);
  const Image back = io::read_png(dir.path() / "a.png");
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 0.5 / 255 + 1e-12);
  EXPECT_HSPLAT_ERROR(io::read_png(dir.path() / "missing.png"), ErrorCode::Io);
}

TEST(Ply, AsciiAndBinaryRoundTrip) {
  TempDir dir;
  PointCloud pc;
  pc.points = {Vec3(1, 2, 3), Vec3(-0.5, 0.25, 8)};
  pc.intensity = {0.5, 0.75};
  for (auto enc : {io::PlyEncoding::Ascii, io::PlyEncoding::BinaryLittleEndian}) {
    io::write_ply(dir.path() / "c.ply", pc, enc);
    const PointCloud back = io::read_ply(dir.path() / "c.ply");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.points, pc.points);
    EXPECT_EQ(back.intensity, pc.intensity);
  }
}

TEST(Manifest, FormatParseRoundTrip) {
  io::DatasetManifest m;
  io::CameraEntry c;
  c.timestamp = 0.5;
  c.split = "test";
  c.camera = hsplat::testing::test_camera(40, 30, 35.5);
  c.camera.world_to_camera.translation = Vec3(0.1, -0.2, 0.3);
  c.image = "images/a.png";
  c.depth = "depth/a.hsimg";
  m.cameras.push_back(c);
  io::LidarEntry l;
  l.timestamp = 0.25;
  l.lidar = hsplat::testing::test_lidar(4, 16, Vec3(1, 2, 3));
  l.lidar.poses[0].timestamp = 0.25;
  l.range = "lidar/a.hsimg";
  m.lidars.push_back(l);
  const std::string text = io::format_manifest(m);
  const io::DatasetManifest back = io::parse_manifest(text, "/data");
  ASSERT_EQ(back.cameras.size(), 1u);
  EXPECT_EQ(back.cameras[0].camera.fx, 35.5);
  EXPECT_EQ(back.cameras[0].camera.world_to_camera.translation, c.camera.world_to_camera.translation);
  EXPECT_EQ(back.cameras[0].image, fs::path("/data/images/a.png"));
  EXPECT_EQ(back.cameras[0].split, "test");
  ASSERT_EQ(back.lidars.size(), 1u);
  EXPECT_EQ(back.lidars[0].lidar.elevations, l.lidar.elevations);
  EXPECT_EQ(back.lidars[0].lidar.poses[0].translation, Vec3(1, 2, 3));
}

TEST(Manifest, RejectsGarbage) {
  EXPECT_HSPLAT_ERROR(io::parse_manifest("not a manifest\n", "."), ErrorCode::Format);
  EXPECT_HSPLAT_ERROR(io::parse_manifest("hsplat-manifest 1\ncamera nonsense\n", "."), ErrorCode::Format);
}

TEST(Config, ParsesAndAppliesKnownKeys) {
  const auto kv = io::parse_key_values("# comment\niterations = 12\nloss.lambda_r = 0.3\nlr.center=2e-4\n");
  TrainConfig cfg;
  io::apply_config(kv, cfg);
  EXPECT_EQ(cfg.iterations, 12);
  EXPECT_EQ(cfg.weights.lambda_r, 0.3);
  EXPECT_EQ(cfg.rates.center, 2e-4);
}

TEST(Config, UnknownKeysAreListed) {
  TrainConfig cfg;
  try {
    io::apply_config({{"loss.lambda_dpeth", "1"}, {"iterations", "3"}}, cfg);
    FAIL() << "no throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    EXPECT_NE(std::string(e.what()).find("loss.lambda_dpeth"), std::string::npos);
  }
  EXPECT_EQ(cfg.iterations, TrainConfig{}.iterations);  // unchanged on failure
}

TEST(Config, BadValuesAndDuplicatesFail) {
  TrainConfig cfg;
  EXPECT_HSPLAT_ERROR(io::apply_config({{"iterations", "many"}}, cfg), ErrorCode::Config);
  EXPECT_HSPLAT_ERROR(io::apply_config({{"loss.lambda_depth", "-1"}}, cfg), ErrorCode::Config);
  EXPECT_HSPLAT_ERROR(io::parse_key_values("a = 1\na = 2\n"), ErrorCode::Config);
  EXPECT_HSPLAT_ERROR(io::parse_key_values("novalue\n"), ErrorCode::Config);
}

TEST(Config, FormatRoundTrips) {
  TrainConfig cfg;
  cfg.iterations = 77;
  cfg.weights.lambda_normal = 0.125;
  TrainConfig back;
  io::apply_config(io::parse_key_values(io::format_config(cfg)), back);
  EXPECT_EQ(io::format_config(back), io::format_config(cfg));
}

TEST(Report, KeyValuesFlagInfinitePsnr) {
  MetricReport m;
  m.cd = 0.0;
  m.psnr = Psnr{0.0, true};
  m.ssim = 1.0;
  const std::string kv = io::report_key_values(m);
  EXPECT_NE(kv.find("cd=0\n"), std::string::npos) << kv;
  EXPECT_NE(kv.find("psnr=inf\n"), std::string::npos) << kv;
  EXPECT_NE(kv.find("psnr_infinite=1\n"), std::string::npos) << kv;
  EXPECT_NE(io::report_json(m).find("\"psnr\": null"), std::string::npos) << io::report_json(m);
}

TEST(AtomicFile, WriteReplacesAndLeavesNoTemp) {
  TempDir dir;
  io::write_text_atomic(dir.path() / "x.txt", "one");
  io::write_text_atomic(dir.path() / "x.txt", "two");
  EXPECT_EQ(io::read_text(dir.path() / "x.txt"), "two");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir.path()), fs::directory_iterator{}), 1);
}

TEST(AtomicFile, DirectoryLockIsExclusive) {
  TempDir dir;
  {
    io::DirectoryLock lock(dir.path());
    EXPECT_HSPLAT_ERROR(io::DirectoryLock second(dir.path()), ErrorCode::Locked);
  }
  EXPECT_NO_THROW(io::DirectoryLock again(dir.path()));
}
