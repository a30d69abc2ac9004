#include "hsplat/io/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "hsplat/error.hpp"
#include "hsplat/io/atomic_file.hpp"
#include "hsplat/io/planar_image.hpp"
#include "hsplat/io/png_image.hpp"

namespace hsplat::io {
namespace {

constexpr const char* kHeader = "hsplat-manifest 1";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string list(std::initializer_list<double> vs) {
  std::string s;
  for (double v : vs) {
    if (!s.empty()) s += ',';
    s += num(v);
  }
  return s;
}

std::string list(const std::vector<double>& vs) {
  std::string s;
  for (double v : vs) {
    if (!s.empty()) s += ',';
    s += num(v);
  }
  return s;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw std::invalid_argument(tok);
  }
  return out;
}

std::string pose_fields(const Quat& q, const Vec3& p) {
  return " q=" + list({q.w(), q.x(), q.y(), q.z()}) + " p=" + list({p.x(), p.y(), p.z()});
}

class Fields {
 public:
  Fields(std::istringstream& in, int line) : line_(line) {
    std::string tok;
    while (in >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) bad("malformed field '" + tok + "'");
      if (!values_.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second) bad("duplicate field '" + tok + "'");
    }
  }

  std::string text(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) bad("missing field '" + key + "'");
    used_.push_back(key);
    return it->second;
  }
  std::string text_or(const std::string& key, const std::string& fallback) {
    return values_.count(key) ? text(key) : fallback;
  }
  double number(const std::string& key) {
    const auto v = numbers(key, 1);
    return v[0];
  }
  std::vector<double> numbers(const std::string& key, std::size_t expect = 0) {
    const std::string s = text(key);
    std::vector<double> v;
    try {
      v = parse_list(s);
    } catch (const std::exception&) {
      bad("bad number in field '" + key + "'");
    }
    if (expect && v.size() != expect) bad("field '" + key + "' needs " + std::to_string(expect) + " values");
    return v;
  }
  void finish() {
    for (const auto& [k, v] : values_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) bad("unknown field '" + k + "'");
    }
  }
  [[noreturn]] void bad(const std::string& msg) const {
    fail(ErrorCode::Format, "manifest line " + std::to_string(line_) + ": " + msg);
  }

 private:
  int line_;
  std::map<std::string, std::string> values_;
  std::vector<std::string> used_;
};

Quat read_quat(Fields& f) {
  const auto q = f.numbers("q", 4);
  Quat out(q[0], q[1], q[2], q[3]);
  if (std::abs(out.norm() - 1.0) > 1e-6) f.bad("pose quaternion is not unit");
  return out;
}

Vec3 read_vec(Fields& f, const std::string& key) {
  const auto v = f.numbers(key, 3);
  return {v[0], v[1], v[2]};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void DatasetManifest::validate() const {
  for (std::size_t i = 1; i < cameras.size(); ++i) {
    require(cameras[i].timestamp >= cameras[i - 1].timestamp, ErrorCode::ContractViolation,
            "manifest camera entries must be sorted by timestamp");
  }
  for (std::size_t i = 1; i < lidars.size(); ++i) {
    require(lidars[i].timestamp >= lidars[i - 1].timestamp, ErrorCode::ContractViolation,
            "manifest lidar entries must be sorted by timestamp");
  }
}

std::string format_manifest(const DatasetManifest& m) {
  m.validate();
  std::string out = std::string(kHeader) + "\n";
  for (const CameraEntry& c : m.cameras) {
    const RigidTransform c2w = c.camera.camera_to_world();
    const Quat q(c2w.rotation);
    out += "camera t=" + num(c.timestamp) + " split=" + c.split + " width=" + std::to_string(c.camera.width) +
           " height=" + std::to_string(c.camera.height) + " fx=" + num(c.camera.fx) + " fy=" + num(c.camera.fy) +
           " cx=" + num(c.camera.cx) + " cy=" + num(c.camera.cy) + pose_fields(q, c2w.translation) +
           " image=" + c.image.generic_string();
    if (!c.depth.empty()) out += " depth=" + c.depth.generic_string();
    out += "\n";
  }
  for (const LidarEntry& l : m.lidars) {
    require(l.lidar.poses.size() == 1, ErrorCode::ContractViolation, "manifest lidar entry needs exactly one pose");
    const RigidPose& pose = l.lidar.poses.front();
    out += "lidar t=" + num(l.timestamp) + " split=" + l.split + " channels=" + std::to_string(l.lidar.channels) +
           " cols=" + std::to_string(l.lidar.azimuth_steps) + " elevations=" + list(l.lidar.elevations) +
           " az_min=" + num(l.lidar.azimuth_min) + " az_max=" + num(l.lidar.azimuth_max) +
           " max_range=" + num(l.lidar.max_range) + pose_fields(pose.rotation, pose.translation) +
           " range=" + l.range.generic_string() + "\n";
  }
  return out;
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  if (!std::getline(in, line) || line != kHeader) fail(ErrorCode::Format, "manifest: missing header line");
  ++n;
  DatasetManifest m;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    Fields f(ls, n);
    if (kind == "camera") {
      CameraEntry c;
      c.timestamp = f.number("t");
      c.split = f.text("split");
      c.camera.width = static_cast<int>(f.number("width"));
      c.camera.height = static_cast<int>(f.number("height"));
      c.camera.fx = f.number("fx");
      c.camera.fy = f.number("fy");
      c.camera.cx = f.number("cx");
      c.camera.cy = f.number("cy");
      const RigidTransform c2w = RigidTransform::from(read_quat(f), read_vec(f, "p"));
      c.camera.world_to_camera = c2w.inverse();
      c.image = resolve(base, f.text("image"));
      const std::string depth = f.text_or("depth", "");
      if (!depth.empty()) c.depth = resolve(base, depth);
      f.finish();
      try {
        c.camera.validate();
      } catch (const Error& e) {
        f.bad(e.what());
      }
      m.cameras.push_back(std::move(c));
    } else if (kind == "lidar") {
      LidarEntry l;
      l.timestamp = f.number("t");
      l.split = f.text("split");
      l.lidar.channels = static_cast<int>(f.number("channels"));
      l.lidar.azimuth_steps = static_cast<int>(f.number("cols"));
      l.lidar.elevations = f.numbers("elevations");
      l.lidar.azimuth_min = f.number("az_min");
      l.lidar.azimuth_max = f.number("az_max");
      l.lidar.max_range = f.number("max_range");
      RigidPose pose;
      pose.timestamp = l.timestamp;
      pose.rotation = read_quat(f);
      pose.translation = read_vec(f, "p");
      l.lidar.poses = {pose};
      l.range = resolve(base, f.text("range"));
      f.finish();
      try {
        l.lidar.validate();
      } catch (const Error& e) {
        f.bad(e.what());
      }
      m.lidars.push_back(std::move(l));
    } else {
      f.bad("unknown entry kind '" + kind + "'");
    }
  }
  for (const auto& c : m.cameras) {
    if (c.split != "train" && c.split != "test") fail(ErrorCode::Format, "manifest: split must be train or test");
  }
  for (const auto& l : m.lidars) {
    if (l.split != "train" && l.split != "test") fail(ErrorCode::Format, "manifest: split must be train or test");
  }
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Format, std::string("manifest: ") + e.what());
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  write_text_atomic(path, format_manifest(m));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text(path), path.parent_path());
}

Dataset load_dataset(const DatasetManifest& m, const std::string& split) {
  require(split == "train" || split == "test" || split == "all", ErrorCode::InvalidArgument,
          "split must be train, test or all");
  auto wanted = [&](const std::string& s) { return split == "all" || s == split; };
  Dataset d;
  for (const CameraEntry& c : m.cameras) {
    if (!wanted(c.split)) continue;
    CameraFrame f;
    f.timestamp = c.timestamp;
    f.camera = c.camera;
    f.color = read_png(c.image);
    if (f.color.channels != 3 || f.color.width != c.camera.width || f.color.height != c.camera.height) {
      fail(ErrorCode::Format, c.image.string() + ": image does not match camera intrinsics");
    }
    d.cameras.push_back(std::move(f));
  }
  for (const LidarEntry& l : m.lidars) {
    if (!wanted(l.split)) continue;
    LidarFrame f;
    f.timestamp = l.timestamp;
    f.lidar = l.lidar;
    f.target = range_image_from_planes(load_planar(l.range));
    if (f.target.rows != l.lidar.channels || f.target.cols != l.lidar.azimuth_steps) {
      fail(ErrorCode::Format, l.range.string() + ": range image does not match the scan pattern");
    }
    d.lidars.push_back(std::move(f));
  }
  return d;
}

}  // namespace hsplat::io
