#include "hsplat/adam.hpp"

#include <cmath>
#include <string>

#include "hsplat/error.hpp"

namespace hsplat {

double LearningRates::for_group(ParamGroup group) const {
  switch (group) {
    case ParamGroup::Center: return center;
    case ParamGroup::TangentU:
    case ParamGroup::TangentV: return tangent;
    case ParamGroup::LogScale: return scale;
    case ParamGroup::Opacity: return opacity;
    case ParamGroup::ShColor:
    case ParamGroup::ShIntensity:
    case ParamGroup::ShRaydrop: return sh;
  }
  return 0.0;
}

void AdamMoments::remap_rows(std::span<const std::ptrdiff_t> source, std::size_t stride) {
  std::vector<double> m(source.size() * stride, 0.0), v(source.size() * stride, 0.0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] < 0) continue;
    const auto s = static_cast<std::size_t>(source[i]);
    require((s + 1) * stride <= m_.size(), ErrorCode::OutOfRange, "optimizer remap source row out of range");
    std::copy_n(m_.begin() + s * stride, stride, m.begin() + i * stride);
    std::copy_n(v_.begin() + s * stride, stride, v.begin() + i * stride);
  }
  m_ = std::move(m);
  v_ = std::move(v);
}

ParamOptimizer::ParamOptimizer(const ParamLayout& layout, std::size_t rows, AdamSettings settings)
    : layout_(layout), moments_(settings) {
  group_of_.resize(layout.stride);
  for (std::size_t k = 0; k < layout.stride; ++k) group_of_[k] = layout.group_of(k);
  moments_.resize(rows * layout.stride);
}

void check_finite_gradients(const GradientBuffer& grads) {
  const ParamLayout& layout = grads.layout();
  const auto& g = grads.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      fail(ErrorCode::NonFinite, "non-finite gradient in group " +
                                     std::string(to_string(layout.group_of(i % layout.stride))) + " (row " +
                                     std::to_string(i / layout.stride) + ")");
    }
  }
}

void orthonormalize_rows(ParamBuffer& params) {
  for (std::size_t r = 0; r < params.rows(); ++r) {
    std::span<double> row = params.row(r);
    Vec3 tu(row[ParamLayout::kTangentU], row[ParamLayout::kTangentU + 1], row[ParamLayout::kTangentU + 2]);
    Vec3 tv(row[ParamLayout::kTangentV], row[ParamLayout::kTangentV + 1], row[ParamLayout::kTangentV + 2]);
    if (std::abs(tu.squaredNorm() - 1.0) < 1e-13 && std::abs(tv.squaredNorm() - 1.0) < 1e-13 &&
        std::abs(tu.dot(tv)) < 1e-13) {
      continue;
    }
    Gaussian2D g;
    g.tangent_u = tu;
    g.tangent_v = tv;
    orthonormalize_tangents(g);
    for (int k = 0; k < 3; ++k) {
      row[ParamLayout::kTangentU + k] = g.tangent_u[k];
      row[ParamLayout::kTangentV + k] = g.tangent_v[k];
    }
  }
}

void ParamOptimizer::step(ParamBuffer& params, const GradientBuffer& grads, const LearningRates& lr,
                          double center_rate) {
  require(params.values().size() == grads.values().size() && params.layout().stride == layout_.stride,
          ErrorCode::ShapeMismatch, "optimizer: parameter and gradient shapes differ");
  require(params.values().size() == moments_.size(), ErrorCode::ShapeMismatch,
          "optimizer: moment buffers out of sync with parameters");
  check_finite_gradients(grads);
  double rates[8];
  for (ParamGroup g : kAllParamGroups) rates[static_cast<int>(g)] = lr.for_group(g);
  rates[static_cast<int>(ParamGroup::Center)] = center_rate;
  const std::size_t stride = layout_.stride;
  moments_.update(params.values(), grads.values(),
                  [&](std::size_t i) { return rates[static_cast<int>(group_of_[i % stride])]; });
  orthonormalize_rows(params);
}

void ParamOptimizer::remap_rows(std::span<const std::ptrdiff_t> source) {
  moments_.remap_rows(source, layout_.stride);
}

}  // namespace hsplat
