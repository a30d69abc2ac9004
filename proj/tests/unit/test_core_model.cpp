#include <gtest/gtest.h>

#include <cmath>

#include "hsplat/gaussian.hpp"
#include "hsplat/random.hpp"
#include "hsplat/sh.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace hsplat;

namespace {

Vec3 random_unit(Rng& rng) {
  Vec3 d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
  return d.normalized();
}

ShBlock random_block(Rng& rng, int degree, int channels) {
  ShBlock b(degree, channels);
  for (double& c : b.data()) c = uniform(rng, -1.0, 1.0);
  return b;
}

}  // namespace

TEST(EvalSh, DegreeZeroIsConstantBasisTimesCoefficient) {
  ShBlock b(0, 1);
  b.at(0, 0) = 0.7;
  EXPECT_NEAR(eval_sh(b, Vec3::UnitZ())[0], 0.7 * 0.28209479177, 1e-11);
  EXPECT_NEAR(decode_color(eval_sh(b, Vec3::UnitZ())[0]), 0.7 * 0.28209479177 + 0.5, 1e-11);
}

TEST(EvalSh, DegreeZeroIgnoresDirection) {
  ShBlock b(0, 3);
  b.at(0, 0) = 0.2;
  b.at(1, 0) = -0.4;
  b.at(2, 0) = 1.3;
  EXPECT_EQ(eval_sh(b, Vec3(0, 0, 1)), eval_sh(b, Vec3(1, 0, 0)));
}

TEST(EvalSh, DegreeOneZTermFlipsWithDirection) {
  ShBlock b(1, 1);
  b.at(0, 2) = 1.0;  // Y_1^0 slot
  const double up = eval_sh(b, Vec3(0, 0, 1))[0];
  const double down = eval_sh(b, Vec3(0, 0, -1))[0];
  EXPECT_NEAR(up, 0.4886025119, 1e-10);
  EXPECT_NEAR(down, -0.4886025119, 1e-10);
}

TEST(EvalSh, ColorDecodingClampsToUnitRange) {
  EXPECT_EQ(decode_color(0.9), 1.0);
  EXPECT_EQ(decode_color(-0.7), 0.0);
  EXPECT_DOUBLE_EQ(decode_color(0.1), 0.6);
}

TEST(EvalSh, IntensityAndRaydropUseSigmoid) {
  ShBlock b(2, 1);
  b.at(0, 0) = logit(0.3) / kShC0;
  EXPECT_NEAR(eval_intensity(b, Vec3::UnitX()), 0.3, 1e-12);
  EXPECT_NEAR(eval_raydrop(b, Vec3::UnitY()), 0.3, 1e-12);
}

TEST(EvalSh, RejectsNonUnitDirection) {
  ShBlock b(1, 1);
  EXPECT_HSPLAT_ERROR(eval_sh(b, Vec3(0, 0, 1.01)), ErrorCode::ContractViolation);
}

TEST(EvalSh, RejectsDegreeAboveThree) {
  EXPECT_HSPLAT_ERROR(ShBlock(4, 1), ErrorCode::UnsupportedDegree);
  EXPECT_HSPLAT_ERROR(sh_basis(4, Vec3::UnitZ()), ErrorCode::UnsupportedDegree);
}

TEST(EvalSh, IsLinearInCoefficients) {
  Rng rng(11);
  for (int degree = 0; degree <= 3; ++degree) {
    for (int trial = 0; trial < 20; ++trial) {
      const ShBlock b1 = random_block(rng, degree, 3);
      const ShBlock b2 = random_block(rng, degree, 3);
      const double a = uniform(rng, -2, 2), c = uniform(rng, -2, 2);
      ShBlock mix(degree, 3);
      for (std::size_t k = 0; k < mix.size(); ++k) mix.data()[k] = a * b1.data()[k] + c * b2.data()[k];
      const Vec3 d = random_unit(rng);
      const auto r1 = eval_sh(b1, d), r2 = eval_sh(b2, d), rm = eval_sh(mix, d);
      for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(rm[ch], a * r1[ch] + c * r2[ch], 1e-12);
    }
  }
}

TEST(EvalSh, BasisIsOrthonormalOnTheSphere) {
  // Monte Carlo estimate of the Gram matrix; loose tolerance.
  Rng rng(5);
  const int n = 200000;
  std::array<std::array<double, 16>, 16> gram{};
  for (int i = 0; i < n; ++i) {
    const ShBasis y = sh_basis(3, random_unit(rng));
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b) gram[a][b] += y[a] * y[b];
  }
  for (int a = 0; a < 16; ++a) {
    for (int b = 0; b < 16; ++b) {
      const double v = gram[a][b] * 4.0 * std::numbers::pi / n;
      EXPECT_NEAR(v, a == b ? 1.0 : 0.0, 0.03) << a << "," << b;
    }
  }
}

TEST(EvalSh, BasisGradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 d = random_unit(rng);
    const auto grad = sh_basis_gradient(3, d);
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 hi = d, lo = d;
      hi[axis] += 1e-4;
      lo[axis] -= 1e-4;
      const ShBasis yh = sh_basis(3, hi), yl = sh_basis(3, lo);
      for (int k = 0; k < 16; ++k) {
        const double fd = (yh[k] - yl[k]) / 2e-4;
        EXPECT_LE(std::abs(fd - grad[k][axis]), std::max(1e-6, 1e-3 * std::abs(fd))) << k << " axis " << axis;
      }
    }
  }
}

TEST(GaussianValue, HandValues) {
  EXPECT_EQ(gaussian_value({0, 0}), 1.0);
  EXPECT_NEAR(gaussian_value({1, 0}), 0.60653066, 1e-8);
  EXPECT_NEAR(gaussian_value({3, 4}), 3.7267e-6, 1e-9);
}

TEST(GaussianValue, DecreasesWithRadiusAndPeaksOnlyAtOrigin) {
  double prev = 2.0;
  for (int i = 0; i <= 100; ++i) {
    const double r = 0.05 * i;
    const double g = gaussian_value({r * 0.6, r * 0.8});
    EXPECT_LT(g, prev);
    EXPECT_GT(g, 0.0);
    if (i > 0) EXPECT_LT(g, 1.0);
    prev = g;
  }
}

TEST(Activate, HandValues) {
  Gaussian2D g = Gaussian2D::zeros({});
  EXPECT_EQ(activate(g).scale_u, 1.0);
  EXPECT_EQ(activate(g).opacity, 0.5);
  g.opacity_logit = 4.0;
  EXPECT_NEAR(activate(g).opacity, 0.9820, 5e-5);
}

TEST(Activate, StrictlyMonotone) {
  Gaussian2D g = Gaussian2D::zeros({});
  double prev_s = 0.0, prev_a = 0.0;
  for (int i = -40; i <= 40; ++i) {
    g.log_scale_u = 0.1 * i;
    g.opacity_logit = 0.25 * i;
    const ActivatedParams a = activate(g);
    EXPECT_GT(a.scale_u, prev_s);
    EXPECT_GT(a.opacity, prev_a);
    EXPECT_LT(a.opacity, 1.0);
    prev_s = a.scale_u;
    prev_a = a.opacity;
  }
}

TEST(Activate, DerivativesMatchFiniteDifferences) {
  // d exp(x)/dx = exp(x); d sigmoid(x)/dx = s (1 - s).
  for (double x : {-3.0, -0.5, 0.0, 1.2, 6.0}) {
    const double fd_s = (std::exp(x + 1e-4) - std::exp(x - 1e-4)) / 2e-4;
    EXPECT_NEAR(fd_s, std::exp(x), std::max(1e-6, 1e-3 * std::exp(x)));
    const double s = sigmoid(x);
    const double fd_a = (sigmoid(x + 1e-4) - sigmoid(x - 1e-4)) / 2e-4;
    EXPECT_NEAR(fd_a, s * (1 - s), std::max(1e-6, 1e-3 * s * (1 - s)));
  }
}

TEST(SplatNormal, HandValues) {
  Gaussian2D g = Gaussian2D::zeros({});
  EXPECT_TRUE(splat_normal(g).isApprox(Vec3(0, 0, 1)));
  g.tangent_u = Vec3::UnitY();
  g.tangent_v = Vec3::UnitX();
  EXPECT_TRUE(splat_normal(g).isApprox(Vec3(0, 0, -1)));
}

TEST(SplatNormal, FlipsTowardSensor) {
  Gaussian2D g = Gaussian2D::zeros({});
  g.center = Vec3(0, 0, 5);
  EXPECT_TRUE(splat_normal(g, Vec3::Zero()).isApprox(Vec3(0, 0, -1)));
  EXPECT_TRUE(splat_normal(g, Vec3(0, 0, 9)).isApprox(Vec3(0, 0, 1)));
}

TEST(SplatNormal, OrthogonalToRandomFrames) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = hsplat::testing::random_rotation(rng);
    Gaussian2D g = Gaussian2D::zeros({});
    g.tangent_u = r.col(0);
    g.tangent_v = r.col(1);
    const Vec3 n = splat_normal(g);
    EXPECT_NEAR(n.dot(g.tangent_u), 0.0, 1e-6);
    EXPECT_NEAR(n.dot(g.tangent_v), 0.0, 1e-6);
    EXPECT_NEAR(n.norm(), 1.0, 1e-12);
  }
}

TEST(SplatNormal, RejectsParallelTangents) {
  Gaussian2D g = Gaussian2D::zeros({});
  g.tangent_v = g.tangent_u;
  EXPECT_HSPLAT_ERROR(splat_normal(g), ErrorCode::ContractViolation);
}

TEST(TangentFrame, GramSchmidtRestoresInvariant) {
  Gaussian2D g = Gaussian2D::zeros({});
  g.tangent_u = Vec3(2, 0.1, 0);
  g.tangent_v = Vec3(0.3, 1, 0.2);
  EXPECT_HSPLAT_ERROR(check_tangent_frame(g), ErrorCode::ContractViolation);
  orthonormalize_tangents(g);
  check_tangent_frame(g);
  EXPECT_TRUE(g.tangent_u.isApprox(Vec3(2, 0.1, 0).normalized()));
}

TEST(ParamLayout, DefaultStrideAndGroupOffsets) {
  const ParamLayout l;
  EXPECT_EQ(l.stride, 12u + 3 * 16 + 9 + 4);
  EXPECT_EQ(l.range(ParamGroup::ShColor), (std::pair<std::size_t, std::size_t>(12, 60)));
  EXPECT_EQ(l.group_of(11), ParamGroup::Opacity);
  EXPECT_EQ(l.group_of(l.sh_raydrop), ParamGroup::ShRaydrop);
}

TEST(ParamLayout, PackUnpackRoundTrip) {
  Rng rng(2);
  const ShDegrees deg{2, 1, 0};
  const ParamLayout l(deg);
  const Gaussian2D g = hsplat::testing::random_splat(rng, Vec3(1, 2, 3), deg);
  std::vector<double> row(l.stride);
  l.pack(g, row);
  Gaussian2D back = Gaussian2D::zeros(deg);
  l.unpack(row, back);
  EXPECT_EQ(back, g);
}
