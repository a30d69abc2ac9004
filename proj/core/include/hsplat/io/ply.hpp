#pragma once

#include <filesystem>

#include "hsplat/lidar.hpp"

namespace hsplat::io {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Vertex element with float x, y, z, intensity.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

/// Reads ascii or binary_little_endian vertex data with float/double x, y, z
/// and an optional intensity property (zero when absent). Other vertex
/// properties are skipped; other elements are rejected.
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace hsplat::io
