#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hsplat/gaussian.hpp"

namespace hsplat {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-15;
};

struct LearningRates {
  double center = 1.6e-4;  // multiplied by the scene extent
  double center_final = 1.6e-6;  // reached at the end of the schedule (exponential decay)
  double sh = 2.5e-3;
  double opacity = 5e-2;
  double scale = 5e-3;
  double tangent = 1e-3;

  double for_group(ParamGroup group) const;
};

/// First/second moment buffers for a flat parameter vector.
class AdamMoments {
 public:
  explicit AdamMoments(AdamSettings settings = {}) : settings_(settings) {}

  std::size_t size() const { return m_.size(); }
  long steps() const { return steps_; }
  const std::vector<double>& first() const { return m_; }
  const std::vector<double>& second() const { return v_; }

  void resize(std::size_t n) {
    m_.resize(n, 0.0);
    v_.resize(n, 0.0);
  }
  void reset() {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
  }

  /// One bias-corrected update with per-entry learning rates lr(i).
  template <class Rate>
  void update(std::span<double> x, std::span<const double> g, Rate&& lr);

  /// Rebuilds rows of `stride` entries: new row i takes old row source[i], or
  /// zeros when source[i] < 0.
  void remap_rows(std::span<const std::ptrdiff_t> source, std::size_t stride);

 private:
  AdamSettings settings_;
  std::vector<double> m_;
  std::vector<double> v_;
  long steps_ = 0;
};

/// Adam over a ParamBuffer with per-group learning rates. Rejects non-finite
/// gradients, naming the group; re-orthonormalizes tangent frames after each step.
class ParamOptimizer {
 public:
  ParamOptimizer(const ParamLayout& layout, std::size_t rows, AdamSettings settings = {});

  const AdamMoments& moments() const { return moments_; }
  long steps() const { return moments_.steps(); }

  /// `center_rate` overrides LearningRates::center (already extent-scaled).
  void step(ParamBuffer& params, const GradientBuffer& grads, const LearningRates& lr, double center_rate);

  void remap_rows(std::span<const std::ptrdiff_t> source);

 private:
  ParamLayout layout_;
  std::vector<ParamGroup> group_of_;
  AdamMoments moments_;
};

/// Throws NonFinite naming the group and row of the first non-finite entry.
void check_finite_gradients(const GradientBuffer& grads);

/// Gram-Schmidt on the tangent slots of every row.
void orthonormalize_rows(ParamBuffer& params);

template <class Rate>
void AdamMoments::update(std::span<double> x, std::span<const double> g, Rate&& lr) {
  resize(x.size());
  ++steps_;
  const double b1 = settings_.beta1, b2 = settings_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * g[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * g[i] * g[i];
    const double mh = m_[i] / c1;
    const double vh = v_[i] / c2;
    x[i] -= lr(i) * mh / (std::sqrt(vh) + settings_.epsilon);
  }
}

}  // namespace hsplat
