#include "hsplat/gaussian.hpp"

#include <cmath>

#include "hsplat/error.hpp"

namespace hsplat {

Gaussian2D Gaussian2D::zeros(const ShDegrees& degrees) {
  Gaussian2D g;
  g.sh_color = ShBlock(degrees.color, 3);
  g.sh_intensity = ShBlock(degrees.intensity, 1);
  g.sh_raydrop = ShBlock(degrees.raydrop, 1);
  return g;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

ActivatedParams activate(const Gaussian2D& g) {
  return {std::exp(g.log_scale_u), std::exp(g.log_scale_v), sigmoid(g.opacity_logit)};
}

double gaussian_value(SplatLocalPoint pt) { return std::exp(-0.5 * (pt.u * pt.u + pt.v * pt.v)); }

Vec3 splat_normal(const Gaussian2D& g) {
  Vec3 n = g.tangent_u.cross(g.tangent_v);
  double len = n.norm();
  double scale = g.tangent_u.norm() * g.tangent_v.norm();
  if (!(len > 1e-12 * scale) || scale == 0.0) {
    fail(ErrorCode::ContractViolation, "degenerate tangent frame (parallel tangents)");
  }
  return n / len;
}

Vec3 splat_normal(const Gaussian2D& g, const Vec3& sensor_position) {
  Vec3 n = splat_normal(g);
  return n.dot(sensor_position - g.center) < 0.0 ? Vec3(-n) : n;
}

void check_tangent_frame(const Gaussian2D& g) {
  if (std::abs(g.tangent_u.norm() - 1.0) > 1e-6 || std::abs(g.tangent_v.norm() - 1.0) > 1e-6 ||
      std::abs(g.tangent_u.dot(g.tangent_v)) > 1e-6) {
    fail(ErrorCode::ContractViolation, "tangent frame is not orthonormal");
  }
}

void orthonormalize_tangents(Gaussian2D& g) {
  double nu = g.tangent_u.norm();
  require(nu > 0.0, ErrorCode::ContractViolation, "zero tangent_u");
  Vec3 u = g.tangent_u / nu;
  Vec3 v = g.tangent_v - u.dot(g.tangent_v) * u;
  double nv = v.norm();
  if (!(nv > 1e-12)) {
    // Parallel tangents: pick any vector orthogonal to u.
    Vec3 helper = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    v = u.cross(helper);
    nv = v.norm();
  }
  g.tangent_u = u;
  g.tangent_v = v / nv;
}

std::string_view to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::Center: return "center";
    case ParamGroup::TangentU: return "tangent_u";
    case ParamGroup::TangentV: return "tangent_v";
    case ParamGroup::LogScale: return "log_scale";
    case ParamGroup::Opacity: return "opacity";
    case ParamGroup::ShColor: return "sh_color";
    case ParamGroup::ShIntensity: return "sh_intensity";
    case ParamGroup::ShRaydrop: return "sh_raydrop";
  }
  return "unknown";
}

ParamLayout::ParamLayout(const ShDegrees& d)
    : degrees(d),
      color_coeffs(sh_coeff_count(d.color)),
      intensity_coeffs(sh_coeff_count(d.intensity)),
      raydrop_coeffs(sh_coeff_count(d.raydrop)) {
  sh_intensity = kShColor + 3 * color_coeffs;
  sh_raydrop = sh_intensity + intensity_coeffs;
  stride = sh_raydrop + raydrop_coeffs;
}

std::pair<std::size_t, std::size_t> ParamLayout::range(ParamGroup group) const {
  switch (group) {
    case ParamGroup::Center: return {kCenter, kCenter + 3};
    case ParamGroup::TangentU: return {kTangentU, kTangentU + 3};
    case ParamGroup::TangentV: return {kTangentV, kTangentV + 3};
    case ParamGroup::LogScale: return {kLogScaleU, kLogScaleV + 1};
    case ParamGroup::Opacity: return {kOpacity, kOpacity + 1};
    case ParamGroup::ShColor: return {kShColor, sh_intensity};
    case ParamGroup::ShIntensity: return {sh_intensity, sh_raydrop};
    case ParamGroup::ShRaydrop: return {sh_raydrop, stride};
  }
  return {0, 0};
}

ParamGroup ParamLayout::group_of(std::size_t offset) const {
  for (ParamGroup g : kAllParamGroups) {
    auto [b, e] = range(g);
    if (offset >= b && offset < e) return g;
  }
  fail(ErrorCode::OutOfRange, "parameter offset outside layout");
}

void ParamLayout::pack(const Gaussian2D& g, std::span<double> row) const {
  require(row.size() == stride, ErrorCode::ShapeMismatch, "parameter row size mismatch");
  require(g.degrees() == degrees, ErrorCode::ShapeMismatch, "primitive SH degrees differ from layout");
  for (int i = 0; i < 3; ++i) {
    row[kCenter + i] = g.center[i];
    row[kTangentU + i] = g.tangent_u[i];
    row[kTangentV + i] = g.tangent_v[i];
  }
  row[kLogScaleU] = g.log_scale_u;
  row[kLogScaleV] = g.log_scale_v;
  row[kOpacity] = g.opacity_logit;
  std::copy(g.sh_color.data().begin(), g.sh_color.data().end(), row.begin() + kShColor);
  std::copy(g.sh_intensity.data().begin(), g.sh_intensity.data().end(), row.begin() + sh_intensity);
  std::copy(g.sh_raydrop.data().begin(), g.sh_raydrop.data().end(), row.begin() + sh_raydrop);
}

void ParamLayout::unpack(std::span<const double> row, Gaussian2D& g) const {
  require(row.size() == stride, ErrorCode::ShapeMismatch, "parameter row size mismatch");
  if (g.degrees() != degrees || g.sh_color.size() == 0) {
    g.sh_color = ShBlock(degrees.color, 3);
    g.sh_intensity = ShBlock(degrees.intensity, 1);
    g.sh_raydrop = ShBlock(degrees.raydrop, 1);
  }
  for (int i = 0; i < 3; ++i) {
    g.center[i] = row[kCenter + i];
    g.tangent_u[i] = row[kTangentU + i];
    g.tangent_v[i] = row[kTangentV + i];
  }
  g.log_scale_u = row[kLogScaleU];
  g.log_scale_v = row[kLogScaleV];
  g.opacity_logit = row[kOpacity];
  auto copy_block = [&](std::size_t offset, ShBlock& block) {
    std::copy(row.begin() + offset, row.begin() + offset + block.size(), block.data().begin());
  };
  copy_block(kShColor, g.sh_color);
  copy_block(sh_intensity, g.sh_intensity);
  copy_block(sh_raydrop, g.sh_raydrop);
}

ParamBuffer ParamBuffer::pack(std::span<const Gaussian2D> prims, const ParamLayout& layout) {
  ParamBuffer buf(prims.size(), layout);
  for (std::size_t i = 0; i < prims.size(); ++i) layout.pack(prims[i], buf.row(i));
  return buf;
}

void ParamBuffer::unpack_into(std::span<Gaussian2D> prims) const {
  require(prims.size() == rows(), ErrorCode::ShapeMismatch, "primitive count differs from buffer rows");
  for (std::size_t i = 0; i < prims.size(); ++i) layout_.unpack(row(i), prims[i]);
}

}  // namespace hsplat
