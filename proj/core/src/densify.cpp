#include "hsplat/densify.hpp"

#include <algorithm>
#include <cmath>

#include "hsplat/error.hpp"

namespace hsplat {

bool DensifySettings::due(int iteration) const {
  return enabled && interval > 0 && iteration >= start && iteration <= stop && iteration % interval == 0;
}

void DensifyAccumulator::resize(std::size_t n) {
  sum_.assign(n, 0.0);
  count_.assign(n, 0);
}

void DensifyAccumulator::add(std::size_t i, double grad_norm) {
  sum_.at(i) += grad_norm;
  ++count_[i];
}

void DensifyAccumulator::reset() {
  std::fill(sum_.begin(), sum_.end(), 0.0);
  std::fill(count_.begin(), count_.end(), 0);
}

DensifyOutcome densify_and_prune(SceneGraph& graph, const DensifyAccumulator& stats,
                                 const DensifySettings& settings, double extent, Rng& rng) {
  const std::size_t total = graph.primitive_count();
  require(stats.size() == total, ErrorCode::ShapeMismatch, "densify statistics out of sync with scene");
  require(settings.split_divisor > 1.0, ErrorCode::InvalidArgument, "split divisor must exceed 1");
  DensifyOutcome out;
  const double log_div = std::log(settings.split_divisor);
  const double big = settings.dense_fraction * extent;

  std::size_t base = 0;
  for (SceneNode& node : graph.nodes) {
    const std::size_t n = node.primitives.size();
    std::vector<Gaussian2D> kept, clones, children;
    std::vector<std::ptrdiff_t> kept_src;
    std::vector<std::size_t> clone_parent, child_parent;
    for (std::size_t i = 0; i < n; ++i) {
      const Gaussian2D& g = node.primitives[i];
      const ActivatedParams act = activate(g);
      if (act.opacity < settings.min_opacity) {
        ++out.pruned;
        continue;
      }
      if (stats.mean(base + i) < settings.grad_threshold) {
        kept.push_back(g);
        kept_src.push_back(static_cast<std::ptrdiff_t>(base + i));
        continue;
      }
      if (std::max(act.scale_u, act.scale_v) > big) {
        ++out.split;
        for (int c = 0; c < 2; ++c) {
          // Uniform point in the disk of child_offset_radius.
          const double r = settings.child_offset_radius * std::sqrt(uniform01(rng));
          const double phi = 2.0 * std::numbers::pi * uniform01(rng);
          Gaussian2D child = g;
          child.center += r * std::cos(phi) * act.scale_u * g.tangent_u + r * std::sin(phi) * act.scale_v * g.tangent_v;
          child.log_scale_u -= log_div;
          child.log_scale_v -= log_div;
          children.push_back(std::move(child));
          child_parent.push_back(i);
        }
      } else {
        ++out.cloned;
        kept.push_back(g);
        kept_src.push_back(static_cast<std::ptrdiff_t>(base + i));
        clones.push_back(g);
        clone_parent.push_back(i);
      }
    }

    std::vector<std::size_t> order;  // local source index per new row
    for (std::ptrdiff_t s : kept_src) order.push_back(static_cast<std::size_t>(s) - base);
    order.insert(order.end(), clone_parent.begin(), clone_parent.end());
    order.insert(order.end(), child_parent.begin(), child_parent.end());

    for (DeformKeyframe& kf : node.deform) {
      DeformKeyframe next;
      for (std::size_t src : order) {
        next.offsets.push_back(kf.offsets.at(src));
        next.rotations.push_back(kf.rotations.at(src));
      }
      kf = std::move(next);
    }

    out.source_rows.insert(out.source_rows.end(), kept_src.begin(), kept_src.end());
    out.source_rows.insert(out.source_rows.end(), clones.size() + children.size(), -1);
    std::vector<Gaussian2D> prims = std::move(kept);
    prims.insert(prims.end(), std::make_move_iterator(clones.begin()), std::make_move_iterator(clones.end()));
    prims.insert(prims.end(), std::make_move_iterator(children.begin()), std::make_move_iterator(children.end()));
    node.primitives = std::move(prims);
    base += n;
  }
  return out;
}

}  // namespace hsplat
