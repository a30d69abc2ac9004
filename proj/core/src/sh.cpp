#include "hsplat/sh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsplat/error.hpp"

namespace hsplat {
namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};

void check_degree(int degree) {
  if (degree < 0 || degree > kMaxShDegree) {
    fail(ErrorCode::UnsupportedDegree, "SH degree " + std::to_string(degree) + " not in [0, 3]");
  }
}

void check_unit(const Vec3& d) {
  if (std::abs(d.norm() - 1.0) > 1e-6) {
    fail(ErrorCode::ContractViolation, "SH evaluation direction is not unit length");
  }
}

}  // namespace

ShBlock::ShBlock(int degree, int channels) : degree_(degree), channels_(channels) {
  check_degree(degree);
  require(channels > 0, ErrorCode::InvalidArgument, "SH block needs at least one channel");
  coeffs_.assign(static_cast<std::size_t>(channels) * sh_coeff_count(degree), 0.0);
}

ShBasis sh_basis(int degree, const Vec3& d) {
  check_degree(degree);
  ShBasis y{};
  y[0] = kShC0;
  if (degree < 1) return y;
  const double x = d.x(), yy_ = d.y(), z = d.z();
  y[1] = -kC1 * yy_;
  y[2] = kC1 * z;
  y[3] = -kC1 * x;
  if (degree < 2) return y;
  const double xx = x * x, yy = yy_ * yy_, zz = z * z;
  const double xy = x * yy_, yz = yy_ * z, xz = x * z;
  y[4] = kC2[0] * xy;
  y[5] = kC2[1] * yz;
  y[6] = kC2[2] * (2.0 * zz - xx - yy);
  y[7] = kC2[3] * xz;
  y[8] = kC2[4] * (xx - yy);
  if (degree < 3) return y;
  y[9] = kC3[0] * yy_ * (3.0 * xx - yy);
  y[10] = kC3[1] * xy * z;
  y[11] = kC3[2] * yy_ * (4.0 * zz - xx - yy);
  y[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  y[13] = kC3[4] * x * (4.0 * zz - xx - yy);
  y[14] = kC3[5] * z * (xx - yy);
  y[15] = kC3[6] * x * (xx - 3.0 * yy);
  return y;
}

std::array<Vec3, kMaxShCoeffs> sh_basis_gradient(int degree, const Vec3& d) {
  check_degree(degree);
  std::array<Vec3, kMaxShCoeffs> g;
  for (auto& v : g) v.setZero();
  if (degree < 1) return g;
  const double x = d.x(), y = d.y(), z = d.z();
  g[1] = Vec3(0, -kC1, 0);
  g[2] = Vec3(0, 0, kC1);
  g[3] = Vec3(-kC1, 0, 0);
  if (degree < 2) return g;
  g[4] = kC2[0] * Vec3(y, x, 0);
  g[5] = kC2[1] * Vec3(0, z, y);
  g[6] = kC2[2] * Vec3(-2 * x, -2 * y, 4 * z);
  g[7] = kC2[3] * Vec3(z, 0, x);
  g[8] = kC2[4] * Vec3(2 * x, -2 * y, 0);
  if (degree < 3) return g;
  const double xx = x * x, yy = y * y, zz = z * z;
  g[9] = kC3[0] * Vec3(6 * x * y, 3 * xx - 3 * yy, 0);
  g[10] = kC3[1] * Vec3(y * z, x * z, x * y);
  g[11] = kC3[2] * Vec3(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
  g[12] = kC3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
  g[13] = kC3[4] * Vec3(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
  g[14] = kC3[5] * Vec3(2 * x * z, -2 * y * z, xx - yy);
  g[15] = kC3[6] * Vec3(3 * xx - 3 * yy, -6 * x * y, 0);
  return g;
}

double eval_sh_channel(const ShBlock& block, int channel, const ShBasis& basis) {
  const int n = block.coeffs_per_channel();
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += block.at(channel, k) * basis[k];
  return sum;
}

std::vector<double> eval_sh(const ShBlock& block, const Vec3& direction) {
  check_unit(direction);
  ShBasis basis = sh_basis(block.degree(), direction);
  std::vector<double> out(block.channels());
  for (int c = 0; c < block.channels(); ++c) out[c] = eval_sh_channel(block, c, basis);
  return out;
}

double decode_color(double raw) { return std::clamp(raw + 0.5, 0.0, 1.0); }

double decode_probability(double raw) { return 1.0 / (1.0 + std::exp(-raw)); }

Vec3 eval_color(const ShBlock& color_block, const Vec3& direction) {
  require(color_block.channels() == 3, ErrorCode::ShapeMismatch, "color SH block needs 3 channels");
  auto raw = eval_sh(color_block, direction);
  return {decode_color(raw[0]), decode_color(raw[1]), decode_color(raw[2])};
}

double eval_intensity(const ShBlock& block, const Vec3& direction) {
  return decode_probability(eval_sh(block, direction).at(0));
}

double eval_raydrop(const ShBlock& block, const Vec3& direction) {
  return decode_probability(eval_sh(block, direction).at(0));
}

}  // namespace hsplat
