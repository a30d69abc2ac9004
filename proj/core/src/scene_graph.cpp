#include "hsplat/scene_graph.hpp"

#include <algorithm>
#include <string>

#include "hsplat/error.hpp"

namespace hsplat {
namespace {

void add_vec(std::span<double> row, std::size_t offset, const Vec3& v) {
  row[offset] += v.x();
  row[offset + 1] += v.y();
  row[offset + 2] += v.z();
}

Vec3 read_vec(std::span<const double> row, std::size_t offset) {
  return {row[offset], row[offset + 1], row[offset + 2]};
}

struct DeformSample {
  Vec3 offset;
  Mat3 rotation;
};

DeformSample sample_deform(const SceneNode& node, std::size_t i, const TimeBracket& b) {
  const DeformKeyframe& k0 = node.deform[b.lo];
  if (b.weight == 0.0) return {k0.offsets[i], k0.rotations[i].normalized().toRotationMatrix()};
  const DeformKeyframe& k1 = node.deform[b.hi];
  Vec3 off = (1.0 - b.weight) * k0.offsets[i] + b.weight * k1.offsets[i];
  Quat q = slerp_shortest(k0.rotations[i], k1.rotations[i], b.weight);
  return {off, q.toRotationMatrix()};
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Background: return "background";
    case NodeKind::Rigid: return "rigid";
    case NodeKind::Deformable: return "deformable";
  }
  return "unknown";
}

SceneGraph::SceneGraph() : SceneGraph(ShDegrees{}) {}

SceneGraph::SceneGraph(const ShDegrees& d) : degrees(d) {
  SceneNode bg;
  bg.kind = NodeKind::Background;
  bg.name = "background";
  nodes.push_back(std::move(bg));
}

std::size_t SceneGraph::primitive_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.primitives.size();
  return n;
}

std::size_t SceneGraph::node_offset(std::size_t node) const {
  require(node < nodes.size(), ErrorCode::OutOfRange, "node index out of range");
  std::size_t n = 0;
  for (std::size_t i = 0; i < node; ++i) n += nodes[i].primitives.size();
  return n;
}

bool SceneGraph::has_movable_nodes() const {
  return std::any_of(nodes.begin(), nodes.end(),
                     [](const SceneNode& n) { return n.kind != NodeKind::Background; });
}

void SceneGraph::validate() const {
  require(!nodes.empty() && nodes.front().kind == NodeKind::Background, ErrorCode::ContractViolation,
          "scene graph must start with a background node");
  for (std::size_t i = 1; i < keyframes.size(); ++i) {
    require(keyframes[i] > keyframes[i - 1], ErrorCode::ContractViolation,
            "keyframe timestamps must be strictly increasing");
  }
  for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
    const SceneNode& node = nodes[ni];
    const std::string where = "node " + std::to_string(ni) + " (" + node.name + "): ";
    for (const auto& g : node.primitives) {
      if (g.degrees() != degrees) fail(ErrorCode::ShapeMismatch, where + "primitive SH degrees differ");
    }
    if (ni > 0 && node.kind == NodeKind::Background) {
      fail(ErrorCode::ContractViolation, where + "only node 0 may be background");
    }
    switch (node.kind) {
      case NodeKind::Background:
        if (!node.poses.empty() || !node.deform.empty()) {
          fail(ErrorCode::ContractViolation, where + "background carries no timeline");
        }
        break;
      case NodeKind::Rigid:
      case NodeKind::Deformable:
        if (node.poses.size() != keyframes.size() || keyframes.empty()) {
          fail(ErrorCode::ContractViolation, where + "needs exactly one pose per keyframe");
        }
        for (std::size_t k = 0; k < keyframes.size(); ++k) {
          check_unit_quaternion(node.poses[k].rotation, "node pose");
          if (node.poses[k].timestamp != keyframes[k]) {
            fail(ErrorCode::ContractViolation, where + "pose timestamps must match keyframes");
          }
        }
        if (node.kind == NodeKind::Rigid && !node.deform.empty()) {
          fail(ErrorCode::ContractViolation, where + "rigid node carries no offset tables");
        }
        if (node.kind == NodeKind::Deformable) {
          if (node.deform.size() != keyframes.size()) {
            fail(ErrorCode::ContractViolation, where + "needs one offset table per keyframe");
          }
          for (const auto& kf : node.deform) {
            if (kf.offsets.size() != node.primitives.size() ||
                kf.rotations.size() != node.primitives.size()) {
              fail(ErrorCode::ShapeMismatch, where + "offset table length differs from primitive count");
            }
            for (const auto& q : kf.rotations) check_unit_quaternion(q, "deform rotation");
          }
        }
        break;
    }
  }
}

ParamBuffer SceneGraph::pack_parameters() const {
  ParamLayout layout(degrees);
  ParamBuffer buf(primitive_count(), layout);
  std::size_t row = 0;
  for (const auto& node : nodes) {
    for (const auto& g : node.primitives) layout.pack(g, buf.row(row++));
  }
  return buf;
}

void SceneGraph::unpack_parameters(const ParamBuffer& params) {
  require(params.rows() == primitive_count(), ErrorCode::ShapeMismatch,
          "parameter rows differ from scene primitive count");
  std::size_t row = 0;
  for (auto& node : nodes) {
    for (auto& g : node.primitives) params.layout().unpack(params.row(row++), g);
  }
}

FlatScene flatten(const SceneGraph& graph, double t) {
  FlatScene flat;
  flat.time = t;
  if (!graph.keyframes.empty()) {
    flat.bracket = bracket_time(graph.keyframes, t);
  } else if (graph.has_movable_nodes()) {
    fail(ErrorCode::OutOfRange, "scene with movable nodes has no keyframes");
  }

  flat.primitives.reserve(graph.primitive_count());
  flat.provenance.reserve(graph.primitive_count());
  flat.node_transforms.resize(graph.nodes.size());

  for (std::size_t ni = 0; ni < graph.nodes.size(); ++ni) {
    const SceneNode& node = graph.nodes[ni];
    if (node.kind == NodeKind::Background) {
      for (std::size_t i = 0; i < node.primitives.size(); ++i) {
        flat.primitives.push_back(node.primitives[i]);
        flat.provenance.push_back({ni, i});
      }
      continue;
    }

    const RigidTransform pose = interpolate_pose(node.poses, t);
    flat.node_transforms[ni] = pose;
    for (std::size_t i = 0; i < node.primitives.size(); ++i) {
      Gaussian2D g = node.primitives[i];
      if (node.kind == NodeKind::Deformable) {
        DeformSample d = sample_deform(node, i, flat.bracket);
        g.center += d.offset;
        g.tangent_u = d.rotation * g.tangent_u;
        g.tangent_v = d.rotation * g.tangent_v;
      }
      g.center = pose.apply(g.center);
      g.tangent_u = pose.rotation * g.tangent_u;
      g.tangent_v = pose.rotation * g.tangent_v;
      flat.primitives.push_back(std::move(g));
      flat.provenance.push_back({ni, i});
    }
  }
  return flat;
}

Provenance invert_provenance(const SceneGraph& graph, std::size_t world_index) {
  std::size_t base = 0;
  for (std::size_t ni = 0; ni < graph.nodes.size(); ++ni) {
    std::size_t n = graph.nodes[ni].primitives.size();
    if (world_index < base + n) return {ni, world_index - base};
    base += n;
  }
  fail(ErrorCode::OutOfRange, "world index " + std::to_string(world_index) +
                                  " out of bounds (size " + std::to_string(base) + ")");
}

DeformGradients zero_deform_gradients(const SceneGraph& graph) {
  DeformGradients out;
  out.offsets.resize(graph.nodes.size());
  for (std::size_t ni = 0; ni < graph.nodes.size(); ++ni) {
    const SceneNode& node = graph.nodes[ni];
    if (node.kind != NodeKind::Deformable) continue;
    out.offsets[ni].assign(node.deform.size(),
                           std::vector<Vec3>(node.primitives.size(), Vec3::Zero()));
  }
  return out;
}

void pull_back_gradients(const SceneGraph& graph, const FlatScene& flat, const GradientBuffer& world,
                         GradientBuffer& canonical, DeformGradients* deform) {
  require(world.rows() == flat.primitives.size() && canonical.rows() == flat.primitives.size(),
          ErrorCode::ShapeMismatch, "gradient rows differ from flattened primitive count");
  const std::size_t stride = world.layout().stride;

  for (std::size_t w = 0; w < flat.primitives.size(); ++w) {
    const Provenance prov = flat.provenance[w];
    const SceneNode& node = graph.nodes[prov.node];
    auto src = world.row(w);
    auto dst = canonical.row(w);
    if (node.kind == NodeKind::Background) {
      for (std::size_t k = 0; k < stride; ++k) dst[k] += src[k];
      continue;
    }

    const Mat3 rt = flat.node_transforms[prov.node].rotation.transpose();
    const Vec3 g_center = rt * read_vec(src, ParamLayout::kCenter);
    Vec3 g_tu = rt * read_vec(src, ParamLayout::kTangentU);
    Vec3 g_tv = rt * read_vec(src, ParamLayout::kTangentV);

    if (node.kind == NodeKind::Deformable) {
      DeformSample d = sample_deform(node, prov.local, flat.bracket);
      g_tu = d.rotation.transpose() * g_tu;
      g_tv = d.rotation.transpose() * g_tv;
      if (deform != nullptr && !deform->offsets[prov.node].empty()) {
        auto& table = deform->offsets[prov.node];
        const TimeBracket& b = flat.bracket;
        if (b.weight == 0.0) {
          table[b.lo][prov.local] += g_center;
        } else {
          table[b.lo][prov.local] += (1.0 - b.weight) * g_center;
          table[b.hi][prov.local] += b.weight * g_center;
        }
      }
    }

    add_vec(dst, ParamLayout::kCenter, g_center);
    add_vec(dst, ParamLayout::kTangentU, g_tu);
    add_vec(dst, ParamLayout::kTangentV, g_tv);
    for (std::size_t k = ParamLayout::kLogScaleU; k < stride; ++k) dst[k] += src[k];
  }
}

}  // namespace hsplat
