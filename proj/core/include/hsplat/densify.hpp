#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hsplat/random.hpp"
#include "hsplat/scene_graph.hpp"

namespace hsplat {

struct DensifySettings {
  bool enabled = true;
  int interval = 500;
  int start = 500;
  int stop = 15000;
  double grad_threshold = 2e-4;   // mean screen-space positional gradient
  double min_opacity = 0.005;
  double dense_fraction = 0.01;   // split when max scale > dense_fraction * extent
  double split_divisor = 1.6;
  double child_offset_radius = 1.125;  // in parent scaled tangent units

  /// True when a densify step runs after `iteration` completed steps.
  bool due(int iteration) const;
};

/// Running per-primitive average of screen-space positional gradient norms.
class DensifyAccumulator {
 public:
  void resize(std::size_t n);
  std::size_t size() const { return sum_.size(); }
  void add(std::size_t i, double grad_norm);
  double mean(std::size_t i) const { return count_[i] ? sum_[i] / count_[i] : 0.0; }
  void reset();

 private:
  std::vector<double> sum_;
  std::vector<std::size_t> count_;
};

struct DensifyOutcome {
  std::size_t split = 0;
  std::size_t cloned = 0;
  std::size_t pruned = 0;
  /// For each new flattened row, the old row it continues, or -1 for new primitives.
  std::vector<std::ptrdiff_t> source_rows;

  /// Pruned primitives plus split parents.
  std::size_t removed() const { return pruned + split; }
};

/// Prunes primitives with opacity below min_opacity; among the rest, those
/// with mean gradient at or above the threshold are split in two (large) or
/// cloned (small). Kept primitives stay in order within their node, followed by
/// clones and then split children. Deformation tables follow their primitives.
DensifyOutcome densify_and_prune(SceneGraph& graph, const DensifyAccumulator& stats,
                                 const DensifySettings& settings, double extent, Rng& rng);

}  // namespace hsplat
