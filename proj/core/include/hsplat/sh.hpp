#pragma once

#include <array>
#include <span>
#include <vector>

#include "hsplat/types.hpp"

namespace hsplat {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);
inline constexpr double kShC0 = 0.28209479177387814;

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real SH coefficients for `channels` channels, stored channel-major:
/// coefficient k of channel c lives at data()[c * coeffs_per_channel() + k].
class ShBlock {
 public:
  ShBlock() = default;
  /// Throws UnsupportedDegree for degree outside [0, 3].
  ShBlock(int degree, int channels);

  int degree() const { return degree_; }
  int channels() const { return channels_; }
  int coeffs_per_channel() const { return sh_coeff_count(degree_); }
  std::size_t size() const { return coeffs_.size(); }

  double& at(int channel, int k) { return coeffs_[channel * coeffs_per_channel() + k]; }
  double at(int channel, int k) const { return coeffs_[channel * coeffs_per_channel() + k]; }

  std::span<double> data() { return coeffs_; }
  std::span<const double> data() const { return coeffs_; }

  bool operator==(const ShBlock&) const = default;

 private:
  int degree_ = 0;
  int channels_ = 0;
  std::vector<double> coeffs_;
};

using ShBasis = std::array<double, kMaxShCoeffs>;

/// Real SH basis values Y_k(direction) for k < (degree+1)^2. The direction is
/// used as given (no normalization, no unit check).
ShBasis sh_basis(int degree, const Vec3& direction);

/// Partial derivatives dY_k/d(x,y,z) of the polynomial basis above, treating
/// the three components as independent.
std::array<Vec3, kMaxShCoeffs> sh_basis_gradient(int degree, const Vec3& direction);

/// Pre-nonlinearity evaluation: sum_k coeff(c,k) Y_k(direction) per channel.
/// Throws ContractViolation when |direction| deviates from 1 by more than 1e-6.
std::vector<double> eval_sh(const ShBlock& block, const Vec3& direction);

/// Raw value of a single channel; same contract as eval_sh.
double eval_sh_channel(const ShBlock& block, int channel, const ShBasis& basis);

/// Color decoding: raw + 0.5 clamped to [0,1].
double decode_color(double raw);
/// Intensity / ray-drop decoding: sigmoid(raw).
double decode_probability(double raw);

Vec3 eval_color(const ShBlock& color_block, const Vec3& direction);
double eval_intensity(const ShBlock& block, const Vec3& direction);
double eval_raydrop(const ShBlock& block, const Vec3& direction);

}  // namespace hsplat
