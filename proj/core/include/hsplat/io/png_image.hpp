#pragma once

#include <filesystem>

#include "hsplat/image.hpp"

namespace hsplat::io {

/// 8-bit PNG with 1 (gray) or 3 (RGB) channels; values in [0, 1] are
/// clamped and rounded to the nearest level.
void write_png(const std::filesystem::path& path, const Image& img);

/// Reads gray / RGB / RGBA PNGs (alpha dropped, 16-bit reduced) as an RGB or
/// gray Image in [0, 1].
Image read_png(const std::filesystem::path& path);

}  // namespace hsplat::io
