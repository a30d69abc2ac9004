#include "hsplat/raytracer.hpp"

#include <algorithm>
#include <cmath>

#include "hsplat/error.hpp"
#include "hsplat/parallel.hpp"

namespace hsplat {
namespace {

constexpr std::size_t kRaysPerChunk = 64;

struct Candidate {
  double depth;
  std::uint32_t primitive;
  SplatLocalPoint local;
};

bool key_less(double da, std::uint32_t ia, double db, std::uint32_t ib) {
  return da < db || (da == db && ia < ib);
}

// Sorted buffer of at most k candidates, ascending (depth, primitive).
class HitBuffer {
 public:
  explicit HitBuffer(int k) : k_(static_cast<std::size_t>(k)) { items_.reserve(k_ + 1); }

  bool full() const { return items_.size() >= k_; }
  std::size_t size() const { return items_.size(); }
  const Candidate& operator[](std::size_t i) const { return items_[i]; }
  const Candidate& back() const { return items_.back(); }
  void clear() { items_.clear(); }

  void offer(const Candidate& c) {
    if (full() && !key_less(c.depth, c.primitive, items_.back().depth, items_.back().primitive)) return;
    auto it = std::lower_bound(items_.begin(), items_.end(), c, [](const Candidate& a, const Candidate& b) {
      return key_less(a.depth, a.primitive, b.depth, b.primitive);
    });
    if (it != items_.end() && it->depth == c.depth && it->primitive == c.primitive) return;
    items_.insert(it, c);
    if (items_.size() > k_) items_.pop_back();
  }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

struct PrimCache {
  Vec3 axis_u;  // scale_u * t_u
  Vec3 axis_v;
  double scale_u;
  double scale_v;
  double opacity;
};

std::optional<RaySplatHit> solve_hit(const Ray& ray, const Vec3& center, const Vec3& axis_u,
                                     const Vec3& axis_v, double max_range, double cutoff,
                                     double min_distance) {
  // [axis_u, axis_v, -d] (u, v, tau) = o - p
  const Vec3 a3 = -ray.direction;
  const Vec3 c23 = axis_v.cross(a3);
  const double det = axis_u.dot(c23);
  const double scale = axis_u.norm() * axis_v.norm() * a3.norm();
  if (!(std::abs(det) > 1e-12 * scale)) return std::nullopt;
  const Vec3 b = ray.origin - center;
  const double inv = 1.0 / det;
  const double u = b.dot(c23) * inv;
  const double v = axis_u.dot(b.cross(a3)) * inv;
  const double tau = axis_u.dot(axis_v.cross(b)) * inv;
  if (!(tau > min_distance) || tau > max_range) return std::nullopt;
  if (u * u + v * v > cutoff * cutoff) return std::nullopt;
  return RaySplatHit{tau, {u, v}};
}

struct Chunk {
  std::vector<RayContribution> hits;
  std::vector<std::uint32_t> offsets;  // per ray in chunk, plus end
};

}  // namespace

std::optional<RaySplatHit> intersect_ray_splat(const Ray& ray, const Gaussian2D& g, double max_range,
                                               double cutoff_sigma, double min_distance) {
  const ActivatedParams act = activate(g);
  return solve_hit(ray, g.center, act.scale_u * g.tangent_u, act.scale_v * g.tangent_v, max_range,
                   cutoff_sigma, min_distance);
}

TraceScene TraceScene::build(std::span<const Gaussian2D> prims) {
  TraceScene s;
  s.proxies = make_proxy_geometry(prims);
  s.bvh = Bvh::build(s.proxies);
  s.primitive_count = prims.size();
  return s;
}

struct RayTracer::State {
  std::size_t primitive_count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<Ray> rays;
  std::vector<Chunk> chunks;
};

RayTracer::RayTracer(TraceSettings settings) : settings_(settings) {
  require(settings_.k >= 1, ErrorCode::InvalidArgument, "k-buffer size must be at least 1");
}
RayTracer::~RayTracer() = default;
RayTracer::RayTracer(RayTracer&&) noexcept = default;
RayTracer& RayTracer::operator=(RayTracer&&) noexcept = default;

RangeImage RayTracer::forward(std::span<const Gaussian2D> prims, const TraceScene& scene,
                              const RayBundle& bundle) {
  require(scene.primitive_count == prims.size(), ErrorCode::ContractViolation,
          "trace scene was built for a different primitive set");
  require(bundle.rays.size() == static_cast<std::size_t>(bundle.rows) * bundle.cols,
          ErrorCode::ShapeMismatch, "ray count differs from rows x cols");

  std::vector<PrimCache> cache(prims.size());
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const ActivatedParams act = activate(prims[i]);
    cache[i] = {act.scale_u * prims[i].tangent_u, act.scale_v * prims[i].tangent_v, act.scale_u,
                act.scale_v, act.opacity};
  }

  auto state = std::make_unique<State>();
  state->primitive_count = prims.size();
  state->rows = bundle.rows;
  state->cols = bundle.cols;
  state->rays = bundle.rays;
  const std::size_t n_rays = bundle.rays.size();
  state->chunks.resize((n_rays + kRaysPerChunk - 1) / kRaysPerChunk);

  RangeImage out(bundle.rows, bundle.cols);
  const TraceSettings s = settings_;
  const double max_range = bundle.max_range;

  parallel_for(state->chunks.size(), [&](std::size_t ci) {
    Chunk& chunk = state->chunks[ci];
    const std::size_t begin = ci * kRaysPerChunk;
    const std::size_t end = std::min(n_rays, begin + kRaysPerChunk);
    HitBuffer buffer(s.k);
    for (std::size_t r = begin; r < end; ++r) {
      chunk.offsets.push_back(static_cast<std::uint32_t>(chunk.hits.size()));
      const Ray& ray = state->rays[r];
      double last_depth = -std::numeric_limits<double>::infinity();
      std::uint32_t last_id = 0;
      bool have_last = false;
      double trans = 1.0;
      double acc_d = 0.0, acc_i = 0.0, acc_r = 0.0;
      bool done = false;
      while (!done) {
        buffer.clear();
        scene.bvh.traverse(
            ray, have_last ? last_depth : s.min_distance,
            [&](std::uint32_t tri) {
              const std::uint32_t p = scene.proxies[tri].primitive;
              const PrimCache& c = cache[p];
              auto hit = solve_hit(ray, prims[p].center, c.axis_u, c.axis_v, max_range, s.cutoff_sigma,
                                   s.min_distance);
              if (!hit) return;
              if (have_last && !key_less(last_depth, last_id, hit->depth, p)) return;
              buffer.offer({hit->depth, p, hit->local});
            },
            [&] { return buffer.full() ? buffer.back().depth : max_range; });

        for (std::size_t j = 0; j < buffer.size(); ++j) {
          const Candidate& h = buffer[j];
          const double g = gaussian_value(h.local);
          const double a = cache[h.primitive].opacity * g;
          if (a < s.min_contribution) continue;
          const ShBasis basis_i = sh_basis(prims[h.primitive].sh_intensity.degree(), ray.direction);
          const ShBasis basis_r = sh_basis(prims[h.primitive].sh_raydrop.degree(), ray.direction);
          const double iv = decode_probability(eval_sh_channel(prims[h.primitive].sh_intensity, 0, basis_i));
          const double rv = decode_probability(eval_sh_channel(prims[h.primitive].sh_raydrop, 0, basis_r));
          const double w = a * trans;
          acc_d += w * h.depth;
          acc_i += w * iv;
          acc_r += w * rv;
          chunk.hits.push_back({h.primitive, h.depth, h.local, g, a, trans, iv, rv});
          trans *= 1.0 - a;
          if (trans < s.termination_transmittance) {
            done = true;
            break;
          }
        }
        if (done || !buffer.full()) break;
        last_depth = buffer.back().depth;
        last_id = buffer.back().primitive;
        have_last = true;
      }
      out.depth[r] = acc_d;
      out.intensity[r] = acc_i;
      out.raydrop[r] = acc_r;
      out.alpha[r] = 1.0 - trans;
    }
    chunk.offsets.push_back(static_cast<std::uint32_t>(chunk.hits.size()));
  });

  state_ = std::move(state);
  return out;
}

std::span<const RayContribution> RayTracer::contributions(std::size_t ray) const {
  require(state_ != nullptr, ErrorCode::ContractViolation, "no forward state");
  require(ray < state_->rays.size(), ErrorCode::OutOfRange, "ray index out of range");
  const Chunk& chunk = state_->chunks[ray / kRaysPerChunk];
  const std::size_t local = ray % kRaysPerChunk;
  return {chunk.hits.data() + chunk.offsets[local], chunk.offsets[local + 1] - chunk.offsets[local]};
}

GradientBuffer RayTracer::backward(std::span<const Gaussian2D> prims, const RangeImageGrad& up) const {
  require(state_ != nullptr, ErrorCode::ContractViolation, "trace backward called without forward state");
  require(prims.size() == state_->primitive_count, ErrorCode::ContractViolation,
          "trace backward: primitive count differs from forward");
  const std::size_t n_rays = state_->rays.size();
  require(up.rows == state_->rows && up.cols == state_->cols && up.depth.size() == n_rays &&
              up.intensity.size() == n_rays && up.raydrop.size() == n_rays && up.alpha.size() == n_rays,
          ErrorCode::ShapeMismatch, "trace backward: upstream gradient shape mismatch");

  const ParamLayout layout(prims.empty() ? ShDegrees{} : prims.front().degrees());
  GradientBuffer grads(prims.size(), layout);
  if (prims.empty()) return grads;

  std::vector<PrimCache> cache(prims.size());
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const ActivatedParams act = activate(prims[i]);
    cache[i] = {act.scale_u * prims[i].tangent_u, act.scale_v * prims[i].tangent_v, act.scale_u,
                act.scale_v, act.opacity};
  }

  struct Entry {
    std::uint32_t primitive;
    std::uint32_t ray;
    Vec3 g_axis_u;
    Vec3 g_axis_v;
    Vec3 g_center;
    double g_opacity;     // d/d(opacity)
    double g_intensity;   // d/d(raw intensity)
    double g_raydrop;
  };
  std::vector<std::vector<Entry>> entries(state_->chunks.size());

  parallel_for(state_->chunks.size(), [&](std::size_t ci) {
    const Chunk& chunk = state_->chunks[ci];
    std::vector<Entry>& out = entries[ci];
    const std::size_t begin = ci * kRaysPerChunk;
    for (std::size_t local = 0; local + 1 < chunk.offsets.size(); ++local) {
      const std::size_t r = begin + local;
      const double gd = up.depth[r], gi = up.intensity[r], gr = up.raydrop[r], ga = up.alpha[r];
      if (gd == 0.0 && gi == 0.0 && gr == 0.0 && ga == 0.0) continue;
      const Ray& ray = state_->rays[r];
      double after_d = 0.0, after_i = 0.0, after_r = 0.0, after_a = 0.0;
      for (std::uint32_t j = chunk.offsets[local + 1]; j-- > chunk.offsets[local];) {
        const RayContribution& h = chunk.hits[j];
        const PrimCache& c = cache[h.primitive];
        const double w = h.alpha * h.transmittance;
        // Compositing: value_j = a_j T_j v_j + (1 - a_j) * (rest), rest scaled by T_j.
        const double g_a = h.transmittance * (gd * (h.depth - after_d) + gi * (h.intensity - after_i) +
                                              gr * (h.raydrop - after_r) + ga * (1.0 - after_a));
        after_d = h.alpha * h.depth + (1.0 - h.alpha) * after_d;
        after_i = h.alpha * h.intensity + (1.0 - h.alpha) * after_i;
        after_r = h.alpha * h.raydrop + (1.0 - h.alpha) * after_r;
        after_a = h.alpha + (1.0 - h.alpha) * after_a;

        const double g_tau = gd * w;
        const double g_opacity = g_a * h.gauss;
        const double g_gauss = g_a * c.opacity;
        const double g_u = -h.local.u * h.gauss * g_gauss;
        const double g_v = -h.local.v * h.gauss * g_gauss;

        // x = A^-1 (o - p) with A = [axis_u, axis_v, -d].
        const Vec3 a3 = -ray.direction;
        const Vec3 c23 = c.axis_v.cross(a3);
        const Vec3 c31 = a3.cross(c.axis_u);
        const Vec3 c12 = c.axis_u.cross(c.axis_v);
        const double det = c.axis_u.dot(c23);
        const Vec3 lambda = (c23 * g_u + c31 * g_v + c12 * g_tau) / det;

        Entry e;
        e.primitive = h.primitive;
        e.ray = static_cast<std::uint32_t>(r);
        e.g_axis_u = -lambda * h.local.u;
        e.g_axis_v = -lambda * h.local.v;
        e.g_center = -lambda;
        e.g_opacity = g_opacity;
        e.g_intensity = gi * w * h.intensity * (1.0 - h.intensity);
        e.g_raydrop = gr * w * h.raydrop * (1.0 - h.raydrop);
        out.push_back(e);
      }
    }
  });

  for (const auto& chunk_entries : entries) {
    for (const Entry& e : chunk_entries) {
      const Gaussian2D& g = prims[e.primitive];
      const PrimCache& c = cache[e.primitive];
      std::span<double> row = grads.row(e.primitive);
      for (int k = 0; k < 3; ++k) {
        row[ParamLayout::kCenter + k] += e.g_center[k];
        row[ParamLayout::kTangentU + k] += c.scale_u * e.g_axis_u[k];
        row[ParamLayout::kTangentV + k] += c.scale_v * e.g_axis_v[k];
      }
      row[ParamLayout::kLogScaleU] += e.g_axis_u.dot(c.axis_u);
      row[ParamLayout::kLogScaleV] += e.g_axis_v.dot(c.axis_v);
      row[ParamLayout::kOpacity] += e.g_opacity * c.opacity * (1.0 - c.opacity);
      const Vec3& dir = state_->rays[e.ray].direction;
      if (e.g_intensity != 0.0) {
        const ShBasis b = sh_basis(g.sh_intensity.degree(), dir);
        for (std::size_t k = 0; k < layout.intensity_coeffs; ++k) row[layout.sh_intensity + k] += e.g_intensity * b[k];
      }
      if (e.g_raydrop != 0.0) {
        const ShBasis b = sh_basis(g.sh_raydrop.degree(), dir);
        for (std::size_t k = 0; k < layout.raydrop_coeffs; ++k) row[layout.sh_raydrop + k] += e.g_raydrop * b[k];
      }
    }
  }
  return grads;
}

RangeImage trace(std::span<const Gaussian2D> prims, const RayBundle& rays, const TraceSettings& settings) {
  RayTracer tracer(settings);
  const TraceScene scene = TraceScene::build(prims);
  return tracer.forward(prims, scene, rays);
}

}  // namespace hsplat
