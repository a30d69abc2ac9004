#include "hsplat/io/config.hpp"

#include <cstdio>
#include <functional>
#include <sstream>

#include "hsplat/error.hpp"
#include "hsplat/io/atomic_file.hpp"

namespace hsplat::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

long long to_int(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument(s);
}

struct Entry {
  std::string key;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define HSPLAT_REAL(name, field)                                                  \
  Entry {                                                                         \
    name, [](TrainConfig& c, const std::string& v) { c.field = to_double(v); },   \
        [](const TrainConfig& c) { return num(c.field); }                         \
  }
#define HSPLAT_INT(name, field)                                                                       \
  Entry {                                                                                             \
    name, [](TrainConfig& c, const std::string& v) { c.field = static_cast<decltype(c.field)>(to_int(v)); }, \
        [](const TrainConfig& c) { return std::to_string(c.field); }                                  \
  }
#define HSPLAT_BOOL(name, field)                                              \
  Entry {                                                                     \
    name, [](TrainConfig& c, const std::string& v) { c.field = to_bool(v); }, \
        [](const TrainConfig& c) { return std::string(c.field ? "true" : "false"); } \
  }

const std::vector<Entry>& table() {
  static const std::vector<Entry> entries = {
      HSPLAT_INT("iterations", iterations),
      HSPLAT_INT("seed", seed),
      HSPLAT_REAL("scene_extent", scene_extent),
      HSPLAT_BOOL("use_camera", use_camera),
      HSPLAT_BOOL("use_lidar", use_lidar),
      HSPLAT_BOOL("optimize_poses", optimize_poses),
      HSPLAT_REAL("pose_rate", pose_rate),
      HSPLAT_BOOL("optimize_deform", optimize_deform),
      HSPLAT_INT("checkpoint_interval", checkpoint_interval),
      Entry{"checkpoint_path", [](TrainConfig& c, const std::string& v) { c.checkpoint_path = v; },
            [](const TrainConfig& c) { return c.checkpoint_path.string(); }},
      HSPLAT_REAL("loss.lambda_r", weights.lambda_r),
      HSPLAT_REAL("loss.lambda_depth", weights.lambda_depth),
      HSPLAT_REAL("loss.lambda_intensity", weights.lambda_intensity),
      HSPLAT_REAL("loss.lambda_raydrop", weights.lambda_raydrop),
      HSPLAT_REAL("loss.lambda_normal", weights.lambda_normal),
      HSPLAT_REAL("lr.center", rates.center),
      HSPLAT_REAL("lr.center_final", rates.center_final),
      HSPLAT_REAL("lr.sh", rates.sh),
      HSPLAT_REAL("lr.opacity", rates.opacity),
      HSPLAT_REAL("lr.scale", rates.scale),
      HSPLAT_REAL("lr.tangent", rates.tangent),
      HSPLAT_REAL("adam.beta1", adam.beta1),
      HSPLAT_REAL("adam.beta2", adam.beta2),
      HSPLAT_REAL("adam.epsilon", adam.epsilon),
      HSPLAT_BOOL("densify.enabled", densify.enabled),
      HSPLAT_INT("densify.interval", densify.interval),
      HSPLAT_INT("densify.start", densify.start),
      HSPLAT_INT("densify.stop", densify.stop),
      HSPLAT_REAL("densify.grad_threshold", densify.grad_threshold),
      HSPLAT_REAL("densify.min_opacity", densify.min_opacity),
      HSPLAT_REAL("densify.dense_fraction", densify.dense_fraction),
      HSPLAT_REAL("densify.split_divisor", densify.split_divisor),
      HSPLAT_INT("raster.tile_size", raster.tile_size),
      HSPLAT_REAL("raster.near_plane", raster.near_plane),
      HSPLAT_REAL("raster.background_r", raster.background[0]),
      HSPLAT_REAL("raster.background_g", raster.background[1]),
      HSPLAT_REAL("raster.background_b", raster.background[2]),
      HSPLAT_INT("trace.k", trace.k),
      HSPLAT_REAL("trace.min_distance", trace.min_distance),
      HSPLAT_INT("ssim.window", ssim.window),
      HSPLAT_REAL("ssim.sigma", ssim.sigma),
      HSPLAT_REAL("ssim.k1", ssim.k1),
      HSPLAT_REAL("ssim.k2", ssim.k2),
  };
  return entries;
}

#undef HSPLAT_REAL
#undef HSPLAT_INT
#undef HSPLAT_BOOL

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Config, "config line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::Config, "config line " + std::to_string(n) + ": empty key");
    if (!out.emplace(key, value).second) fail(ErrorCode::Config, "duplicate config key: " + key);
  }
  return out;
}

void apply_config(const std::map<std::string, std::string>& values, TrainConfig& cfg) {
  std::string unknown;
  for (const auto& [k, v] : values) {
    bool known = false;
    for (const Entry& e : table()) known = known || e.key == k;
    if (!known) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) fail(ErrorCode::Config, "unknown config keys: " + unknown);
  TrainConfig next = cfg;
  for (const Entry& e : table()) {
    auto it = values.find(e.key);
    if (it == values.end()) continue;
    try {
      e.set(next, it->second);
    } catch (const std::logic_error&) {
      fail(ErrorCode::Config, "bad value for config key " + e.key + ": '" + it->second + "'");
    }
  }
  try {
    next.weights.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  if (next.iterations < 0) fail(ErrorCode::Config, "iterations must be non-negative");
  if (next.trace.k < 1) fail(ErrorCode::Config, "trace.k must be at least 1");
  if (next.raster.tile_size < 1) fail(ErrorCode::Config, "raster.tile_size must be at least 1");
  cfg = next;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  TrainConfig cfg;
  apply_config(parse_key_values(read_text(path)), cfg);
  return cfg;
}

std::string format_config(const TrainConfig& cfg) {
  std::string out;
  for (const Entry& e : table()) out += e.key + " = " + e.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : table()) keys.push_back(e.key);
  return keys;
}

}  // namespace hsplat::io
