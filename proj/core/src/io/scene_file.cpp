#include "hsplat/io/scene_file.hpp"

#include <string>

#include "hsplat/error.hpp"
#include "hsplat/io/atomic_file.hpp"
#include "hsplat/io/binary.hpp"

namespace hsplat::io {
namespace {

constexpr char kMagic[8] = {'H', 'S', 'P', 'L', 'S', 'C', 'N', '\0'};

void write_quat(ByteWriter& w, const Quat& q) {
  w.f64(q.w());
  w.f64(q.x());
  w.f64(q.y());
  w.f64(q.z());
}

Quat read_quat(ByteReader& r) {
  const double w = r.f64(), x = r.f64(), y = r.f64(), z = r.f64();
  return Quat(w, x, y, z);
}

void write_vec(ByteWriter& w, const Vec3& v) {
  w.f64(v.x());
  w.f64(v.y());
  w.f64(v.z());
}

Vec3 read_vec(ByteReader& r) {
  const double x = r.f64(), y = r.f64(), z = r.f64();
  return {x, y, z};
}

}  // namespace

std::vector<std::uint8_t> serialize_scene(const SceneGraph& graph) {
  graph.validate();
  const ParamLayout layout(graph.degrees);
  ByteWriter w;
  w.raw({kMagic, sizeof(kMagic)});
  w.u32(kSceneFileVersion);
  w.u32(static_cast<std::uint32_t>(graph.degrees.color));
  w.u32(static_cast<std::uint32_t>(graph.degrees.intensity));
  w.u32(static_cast<std::uint32_t>(graph.degrees.raydrop));
  w.u32(static_cast<std::uint32_t>(layout.stride));
  w.u32(static_cast<std::uint32_t>(graph.keyframes.size()));
  for (double t : graph.keyframes) w.f64(t);
  w.u32(static_cast<std::uint32_t>(graph.nodes.size()));
  std::vector<double> row(layout.stride);
  for (const SceneNode& node : graph.nodes) {
    w.u8(static_cast<std::uint8_t>(node.kind));
    w.str(node.name);
    w.u64(node.primitives.size());
    for (const Gaussian2D& g : node.primitives) {
      layout.pack(g, row);
      for (double v : row) w.f64(v);
    }
    w.u32(static_cast<std::uint32_t>(node.poses.size()));
    for (const RigidPose& p : node.poses) {
      w.f64(p.timestamp);
      write_quat(w, p.rotation);
      write_vec(w, p.translation);
    }
    w.u32(static_cast<std::uint32_t>(node.deform.size()));
    for (const DeformKeyframe& kf : node.deform) {
      for (std::size_t i = 0; i < node.primitives.size(); ++i) {
        write_vec(w, kf.offsets[i]);
        write_quat(w, kf.rotations[i]);
      }
    }
  }
  w.u64(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

SceneGraph parse_scene(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    fail(ErrorCode::Format, "not a scene file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kSceneFileVersion) {
    fail(ErrorCode::VersionMismatch, "scene file version " + std::to_string(version) + ", expected " +
                                         std::to_string(kSceneFileVersion));
  }
  if (bytes.size() < 8) fail(ErrorCode::Format, "scene file truncated");
  ByteReader tail(bytes.subspan(bytes.size() - 8));
  if (tail.u64() != fnv1a(bytes.first(bytes.size() - 8))) fail(ErrorCode::Format, "scene file checksum mismatch");

  ShDegrees degrees;
  degrees.color = static_cast<int>(r.u32());
  degrees.intensity = static_cast<int>(r.u32());
  degrees.raydrop = static_cast<int>(r.u32());
  if (degrees.color > kMaxShDegree || degrees.intensity > kMaxShDegree || degrees.raydrop > kMaxShDegree) {
    fail(ErrorCode::Format, "scene file: SH degree out of range");
  }
  const ParamLayout layout(degrees);
  if (r.u32() != layout.stride) fail(ErrorCode::Format, "scene file: parameter stride mismatch");

  SceneGraph graph(degrees);
  graph.nodes.clear();
  const std::uint32_t nk = r.u32();
  if (nk > r.remaining() / 8) fail(ErrorCode::Format, "scene file: keyframe count exceeds data");
  for (std::uint32_t i = 0; i < nk; ++i) graph.keyframes.push_back(r.f64());
  const std::uint32_t nn = r.u32();
  std::vector<double> row(layout.stride);
  for (std::uint32_t ni = 0; ni < nn; ++ni) {
    SceneNode node;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(NodeKind::Deformable)) fail(ErrorCode::Format, "scene file: bad node kind");
    node.kind = static_cast<NodeKind>(kind);
    node.name = r.str();
    const std::uint64_t np = r.u64();
    if (np > r.remaining() / (8 * layout.stride)) fail(ErrorCode::Format, "scene file: primitive count exceeds data");
    node.primitives.reserve(np);
    for (std::uint64_t i = 0; i < np; ++i) {
      for (double& v : row) v = r.f64();
      Gaussian2D g = Gaussian2D::zeros(degrees);
      layout.unpack(row, g);
      node.primitives.push_back(std::move(g));
    }
    const std::uint32_t npose = r.u32();
    if (npose > r.remaining() / 64) fail(ErrorCode::Format, "scene file: pose count exceeds data");
    for (std::uint32_t i = 0; i < npose; ++i) {
      RigidPose p;
      p.timestamp = r.f64();
      p.rotation = read_quat(r);
      p.translation = read_vec(r);
      node.poses.push_back(p);
    }
    const std::uint32_t nd = r.u32();
    if (np > 0 && nd > r.remaining() / (56 * np)) fail(ErrorCode::Format, "scene file: deform count exceeds data");
    for (std::uint32_t k = 0; k < nd; ++k) {
      DeformKeyframe kf;
      for (std::uint64_t i = 0; i < np; ++i) {
        kf.offsets.push_back(read_vec(r));
        kf.rotations.push_back(read_quat(r));
      }
      node.deform.push_back(std::move(kf));
    }
    graph.nodes.push_back(std::move(node));
  }
  if (r.remaining() != 8) fail(ErrorCode::Format, "scene file: trailing bytes");
  try {
    graph.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Format, std::string("scene file: invalid scene: ") + e.what());
  }
  return graph;
}

void save_scene(const std::filesystem::path& path, const SceneGraph& graph) {
  write_file_atomic(path, serialize_scene(graph));
}

SceneGraph load_scene(const std::filesystem::path& path) { return parse_scene(read_file(path)); }

}  // namespace hsplat::io
