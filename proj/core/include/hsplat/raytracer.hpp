#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hsplat/bvh.hpp"
#include "hsplat/gaussian.hpp"
#include "hsplat/lidar.hpp"

namespace hsplat {

struct TraceSettings {
  int k = 16;                              // hits gathered per traversal round
  double cutoff_sigma = 3.0;
  double min_contribution = 1.0 / 255.0;   // skip alpha * G below this
  double termination_transmittance = 1e-4;
  double min_distance = 1e-6;              // hits closer than this are ignored
};

struct RaySplatHit {
  double depth = 0.0;  // distance along the unit ray direction
  SplatLocalPoint local;
};

/// Hit of a unit-direction ray with the splat plane, with (u, v) in scaled
/// tangent coordinates. Empty when the plane is parallel to the ray, or the
/// hit lies before `min_distance`, beyond `max_range` or outside the cutoff disk.
std::optional<RaySplatHit> intersect_ray_splat(const Ray& ray, const Gaussian2D& g,
                                               double max_range = std::numeric_limits<double>::infinity(),
                                               double cutoff_sigma = 3.0, double min_distance = 1e-6);

/// Proxy triangles plus their BVH for one set of primitives.
struct TraceScene {
  std::vector<ProxyTriangle> proxies;
  Bvh bvh;
  std::size_t primitive_count = 0;

  static TraceScene build(std::span<const Gaussian2D> prims);
};

/// One composited hit of one ray, kept for the backward pass.
struct RayContribution {
  std::uint32_t primitive = 0;
  double depth = 0.0;
  SplatLocalPoint local;
  double gauss = 0.0;
  double alpha = 0.0;          // opacity * gauss
  double transmittance = 0.0;  // before this hit
  double intensity = 0.0;
  double raydrop = 0.0;
};

/// k-buffer ray tracer. Each ray gathers the next k hits beyond the last
/// processed (depth, primitive) key, composites them front to back and
/// repeats until transmittance drops below the threshold or no hits remain.
class RayTracer {
 public:
  explicit RayTracer(TraceSettings settings = {});
  ~RayTracer();
  RayTracer(RayTracer&&) noexcept;
  RayTracer& operator=(RayTracer&&) noexcept;

  const TraceSettings& settings() const { return settings_; }

  RangeImage forward(std::span<const Gaussian2D> prims, const TraceScene& scene, const RayBundle& rays);

  /// Gradients on raw parameters for upstream gradients on the last forward's
  /// outputs. Throws ContractViolation without a matching forward state.
  GradientBuffer backward(std::span<const Gaussian2D> prims, const RangeImageGrad& upstream) const;

  /// Composited hits of ray i from the last forward, front to back.
  std::span<const RayContribution> contributions(std::size_t ray) const;

 private:
  struct State;
  TraceSettings settings_;
  std::unique_ptr<State> state_;
};

RangeImage trace(std::span<const Gaussian2D> prims, const RayBundle& rays,
                 const TraceSettings& settings = {});

}  // namespace hsplat
