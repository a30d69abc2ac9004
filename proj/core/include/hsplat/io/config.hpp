#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hsplat/trainer.hpp"

namespace hsplat::io {

/// Flat `key = value` lines; `#` starts a comment. Keys carry section
/// prefixes such as `loss.lambda_r`. Throws Config on malformed or duplicate keys.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies known keys to `cfg`. Throws Config listing every unknown key, or
/// naming a key whose value does not parse.
void apply_config(const std::map<std::string, std::string>& values, TrainConfig& cfg);

TrainConfig load_train_config(const std::filesystem::path& path);

/// Every supported key with its current value, one per line.
std::string format_config(const TrainConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace hsplat::io
