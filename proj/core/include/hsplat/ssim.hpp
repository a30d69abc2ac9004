#pragma once

#include <vector>

#include "hsplat/image.hpp"

namespace hsplat {

struct SsimSettings {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all pixels and channels. Every pixel gets a window: at the
/// borders the Gaussian window is cut to the image and renormalized.
double ssim(const Image& x, const Image& y, const SsimSettings& settings = {});

/// Same value; also writes dSSIM/dx into grad_x (resized to x.data.size()).
double ssim_with_gradient(const Image& x, const Image& y, std::vector<double>& grad_x,
                          const SsimSettings& settings = {});

}  // namespace hsplat
