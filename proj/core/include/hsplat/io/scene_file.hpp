#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hsplat/scene_graph.hpp"

namespace hsplat::io {

inline constexpr std::uint32_t kSceneFileVersion = 1;

/// Binary scene encoding (layout in docs/formats.md). Doubles are stored
/// bit-exactly, so parse(serialize(g)) == g.
std::vector<std::uint8_t> serialize_scene(const SceneGraph& graph);

/// Throws Format for bad magic, truncation or checksum mismatch, and
/// VersionMismatch for other versions.
SceneGraph parse_scene(std::span<const std::uint8_t> bytes);

void save_scene(const std::filesystem::path& path, const SceneGraph& graph);
SceneGraph load_scene(const std::filesystem::path& path);

}  // namespace hsplat::io
