#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hsplat/gaussian.hpp"
#include "hsplat/pose.hpp"

namespace hsplat {

enum class NodeKind { Background, Rigid, Deformable };

std::string_view to_string(NodeKind kind);

/// Per-keyframe, per-primitive canonical-space displacement and local
/// tangent-frame rotation of a deformable node.
struct DeformKeyframe {
  std::vector<Vec3> offsets;
  std::vector<Quat> rotations;

};

struct SceneNode {
  NodeKind kind = NodeKind::Background;
  std::string name;
  std::vector<Gaussian2D> primitives;  // canonical space
  std::vector<RigidPose> poses;        // Rigid and Deformable: one per keyframe
  std::vector<DeformKeyframe> deform;  // Deformable: one per keyframe

};

/// nodes[0] is always the static background. Movable nodes follow, each
/// defined in its own canonical space with a timeline sampled at `keyframes`.
struct SceneGraph {
  ShDegrees degrees;
  std::vector<double> keyframes;
  std::vector<SceneNode> nodes;

  SceneGraph();
  explicit SceneGraph(const ShDegrees& d);

  SceneNode& background() { return nodes.front(); }
  const SceneNode& background() const { return nodes.front(); }

  std::size_t primitive_count() const;
  /// Global (flattened) index of the first primitive of `node`.
  std::size_t node_offset(std::size_t node) const;
  bool has_movable_nodes() const;

  /// Throws ContractViolation / ShapeMismatch when an invariant is broken.
  void validate() const;

  /// Canonical parameters of every primitive, in flattened order.
  ParamBuffer pack_parameters() const;
  void unpack_parameters(const ParamBuffer& params);

};

struct Provenance {
  std::size_t node = 0;
  std::size_t local = 0;

  bool operator==(const Provenance&) const = default;
};

/// World-space primitives at one time instant.
struct FlatScene {
  double time = 0.0;
  std::vector<Gaussian2D> primitives;
  std::vector<Provenance> provenance;
  std::vector<RigidTransform> node_transforms;  // per node, at `time`
  TimeBracket bracket;                          // keyframe bracket used
};

/// Throws OutOfRange when `t` is outside the keyframe range (static scenes
/// without keyframes accept any t).
FlatScene flatten(const SceneGraph& graph, double t);

/// Throws OutOfRange for an index past the end.
Provenance invert_provenance(const SceneGraph& graph, std::size_t world_index);

/// Gradients on deformable-node offset tables, indexed [node][keyframe][prim].
struct DeformGradients {
  std::vector<std::vector<std::vector<Vec3>>> offsets;
};

/// Maps world-space gradients of a flattened scene back to canonical
/// parameters (added into `canonical`, same row order as flatten). Offset
/// gradients of deformable nodes are added into `deform` when non-null.
void pull_back_gradients(const SceneGraph& graph, const FlatScene& flat,
                         const GradientBuffer& world, GradientBuffer& canonical,
                         DeformGradients* deform = nullptr);

DeformGradients zero_deform_gradients(const SceneGraph& graph);

}  // namespace hsplat
