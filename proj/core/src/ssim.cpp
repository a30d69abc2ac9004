#include "hsplat/ssim.hpp"

#include <cmath>

#include "hsplat/error.hpp"

namespace hsplat {
namespace {

std::vector<double> gaussian_kernel(const SsimSettings& s) {
  require(s.window >= 1 && s.window % 2 == 1, ErrorCode::InvalidArgument, "ssim window must be odd");
  require(s.sigma > 0.0, ErrorCode::InvalidArgument, "ssim sigma must be positive");
  const int r = s.window / 2;
  std::vector<double> k(s.window);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (s.sigma * s.sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Planar single-channel buffer helpers. Each filter pass sums kernel-weighted
// in-bounds samples; `norm` holds the kernel mass that stayed inside.
struct Filter {
  int w, h;
  std::vector<double> kernel;
  std::vector<double> norm_x, norm_y;

  Filter(int width, int height, const SsimSettings& s) : w(width), h(height), kernel(gaussian_kernel(s)) {
    norm_x = mass(w);
    norm_y = mass(h);
  }

  std::vector<double> mass(int n) const {
    const int r = static_cast<int>(kernel.size()) / 2;
    std::vector<double> m(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int d = -r; d <= r; ++d) {
        if (i + d >= 0 && i + d < n) m[i] += kernel[d + r];
      }
    }
    return m;
  }

  // Raw (unnormalized) separable filter. The kernel is symmetric, so this is
  // also its own adjoint.
  std::vector<double> raw(const std::vector<double>& in) const {
    const int r = static_cast<int>(kernel.size()) / 2;
    std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int d = -r; d <= r; ++d) {
          const int xx = x + d;
          if (xx >= 0 && xx < w) acc += kernel[d + r] * in[static_cast<std::size_t>(y) * w + xx];
        }
        tmp[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int d = -r; d <= r; ++d) {
          const int yy = y + d;
          if (yy >= 0 && yy < h) acc += kernel[d + r] * tmp[static_cast<std::size_t>(yy) * w + x];
        }
        out[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
    return out;
  }

  double weight(std::size_t i) const { return norm_x[i % w] * norm_y[i / w]; }

  std::vector<double> mean(const std::vector<double>& in) const {
    std::vector<double> out = raw(in);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= weight(i);
    return out;
  }
};

double run(const Image& x, const Image& y, std::vector<double>* grad, const SsimSettings& s) {
  require(x.same_shape(y), ErrorCode::ShapeMismatch, "ssim: image shapes differ");
  require(x.width > 0 && x.height > 0 && x.channels > 0, ErrorCode::EmptyInput, "ssim: empty image");
  const double c1 = (s.k1 * s.dynamic_range) * (s.k1 * s.dynamic_range);
  const double c2 = (s.k2 * s.dynamic_range) * (s.k2 * s.dynamic_range);
  const Filter f(x.width, x.height, s);
  const std::size_t n = x.pixels();
  const double scale = 1.0 / (static_cast<double>(n) * x.channels);
  if (grad) grad->assign(x.data.size(), 0.0);

  double total = 0.0;
  std::vector<double> px(n), py(n), pxx(n), pyy(n), pxy(n);
  for (int c = 0; c < x.channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = x.data[i * x.channels + c];
      py[i] = y.data[i * x.channels + c];
      pxx[i] = px[i] * px[i];
      pyy[i] = py[i] * py[i];
      pxy[i] = px[i] * py[i];
    }
    const auto mx = f.mean(px), my = f.mean(py), exx = f.mean(pxx), eyy = f.mean(pyy), exy = f.mean(pxy);
    std::vector<double> g_mu(grad ? n : 0), g_xx(grad ? n : 0), g_xy(grad ? n : 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double vx = exx[i] - mx[i] * mx[i];
      const double vy = eyy[i] - my[i] * my[i];
      const double cxy = exy[i] - mx[i] * my[i];
      const double a1 = 2.0 * mx[i] * my[i] + c1;
      const double a2 = 2.0 * cxy + c2;
      const double b1 = mx[i] * mx[i] + my[i] * my[i] + c1;
      const double b2 = vx + vy + c2;
      const double sv = a1 * a2 / (b1 * b2);
      total += sv;
      if (!grad) continue;
      const double d_mu = 2.0 * my[i] * a2 / (b1 * b2) - sv * 2.0 * mx[i] / b1;
      const double d_var = -sv / b2;
      const double d_cov = 2.0 * a1 / (b1 * b2);
      const double inv_w = scale / f.weight(i);
      g_mu[i] = (d_mu - 2.0 * mx[i] * d_var - my[i] * d_cov) * inv_w;
      g_xx[i] = d_var * inv_w;
      g_xy[i] = d_cov * inv_w;
    }
    if (!grad) continue;
    const auto r_mu = f.raw(g_mu), r_xx = f.raw(g_xx), r_xy = f.raw(g_xy);
    for (std::size_t i = 0; i < n; ++i) {
      (*grad)[i * x.channels + c] = r_mu[i] + 2.0 * px[i] * r_xx[i] + py[i] * r_xy[i];
    }
  }
  return total / (static_cast<double>(n) * x.channels);
}

}  // namespace

double ssim(const Image& x, const Image& y, const SsimSettings& settings) {
  return run(x, y, nullptr, settings);
}

double ssim_with_gradient(const Image& x, const Image& y, std::vector<double>& grad_x,
                          const SsimSettings& settings) {
  return run(x, y, &grad_x, settings);
}

}  // namespace hsplat
