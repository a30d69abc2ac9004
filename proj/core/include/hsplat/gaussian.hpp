#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hsplat/sh.hpp"
#include "hsplat/types.hpp"

namespace hsplat {

struct ShDegrees {
  int color = 3;
  int intensity = 2;
  int raydrop = 1;

  bool operator==(const ShDegrees&) const = default;
};

/// One planar Gaussian surfel. All fields are raw (unconstrained) learnable
/// parameters; use activate() for scales and opacity.
struct Gaussian2D {
  Vec3 center = Vec3::Zero();
  Vec3 tangent_u = Vec3::UnitX();
  Vec3 tangent_v = Vec3::UnitY();
  double log_scale_u = 0.0;
  double log_scale_v = 0.0;
  double opacity_logit = 0.0;
  ShBlock sh_color;
  ShBlock sh_intensity;
  ShBlock sh_raydrop;

  /// Zero coefficients, identity tangent frame, unit scales, opacity 0.5.
  static Gaussian2D zeros(const ShDegrees& degrees);

  ShDegrees degrees() const {
    return {sh_color.degree(), sh_intensity.degree(), sh_raydrop.degree()};
  }

  bool operator==(const Gaussian2D&) const = default;
};

struct SplatLocalPoint {
  double u = 0.0;
  double v = 0.0;
};

struct ActivatedParams {
  double scale_u = 1.0;
  double scale_v = 1.0;
  double opacity = 0.5;
};

double sigmoid(double x);
double logit(double p);

ActivatedParams activate(const Gaussian2D& g);

/// exp(-(u^2 + v^2) / 2)
double gaussian_value(SplatLocalPoint pt);

/// Normalized t_u x t_v. Throws ContractViolation for degenerate frames.
Vec3 splat_normal(const Gaussian2D& g);
/// Same, flipped so that it points toward `sensor_position`.
Vec3 splat_normal(const Gaussian2D& g, const Vec3& sensor_position);

/// Throws ContractViolation unless the tangents are unit and orthogonal (1e-6).
void check_tangent_frame(const Gaussian2D& g);

/// Gram-Schmidt t_v against t_u, then normalize both.
void orthonormalize_tangents(Gaussian2D& g);

/// Parameter groups in packed order.
enum class ParamGroup {
  Center,
  TangentU,
  TangentV,
  LogScale,
  Opacity,
  ShColor,
  ShIntensity,
  ShRaydrop,
};

inline constexpr ParamGroup kAllParamGroups[] = {
    ParamGroup::Center,  ParamGroup::TangentU, ParamGroup::TangentV,    ParamGroup::LogScale,
    ParamGroup::Opacity, ParamGroup::ShColor,  ParamGroup::ShIntensity, ParamGroup::ShRaydrop};

std::string_view to_string(ParamGroup group);

/// Flat layout of one primitive's raw parameters:
/// center(3) t_u(3) t_v(3) log_scale(2) opacity(1) color(3n_c) intensity(n_i) raydrop(n_r)
struct ParamLayout {
  static constexpr std::size_t kCenter = 0;
  static constexpr std::size_t kTangentU = 3;
  static constexpr std::size_t kTangentV = 6;
  static constexpr std::size_t kLogScaleU = 9;
  static constexpr std::size_t kLogScaleV = 10;
  static constexpr std::size_t kOpacity = 11;
  static constexpr std::size_t kShColor = 12;

  explicit ParamLayout(const ShDegrees& degrees = {});

  ShDegrees degrees;
  std::size_t color_coeffs;      // per channel
  std::size_t intensity_coeffs;
  std::size_t raydrop_coeffs;
  std::size_t sh_intensity;      // offset
  std::size_t sh_raydrop;        // offset
  std::size_t stride;

  /// [begin, end) offsets of a group inside a row.
  std::pair<std::size_t, std::size_t> range(ParamGroup group) const;
  ParamGroup group_of(std::size_t offset) const;

  void pack(const Gaussian2D& g, std::span<double> row) const;
  void unpack(std::span<const double> row, Gaussian2D& g) const;
};

/// Row-per-primitive buffer in ParamLayout order. Used both for parameter
/// snapshots and for gradients.
class ParamBuffer {
 public:
  ParamBuffer() = default;
  ParamBuffer(std::size_t rows, const ParamLayout& layout)
      : layout_(layout), data_(rows * layout.stride, 0.0) {}

  const ParamLayout& layout() const { return layout_; }
  std::size_t rows() const { return layout_.stride ? data_.size() / layout_.stride : 0; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * layout_.stride, layout_.stride}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * layout_.stride, layout_.stride};
  }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }
  void resize_rows(std::size_t rows) { data_.resize(rows * layout_.stride, 0.0); }

  static ParamBuffer pack(std::span<const Gaussian2D> prims, const ParamLayout& layout);
  void unpack_into(std::span<Gaussian2D> prims) const;

 private:
  ParamLayout layout_{};
  std::vector<double> data_;
};

using GradientBuffer = ParamBuffer;

}  // namespace hsplat
