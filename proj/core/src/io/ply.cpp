#include "hsplat/io/ply.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "hsplat/error.hpp"
#include "hsplat/io/atomic_file.hpp"
#include "hsplat/io/binary.hpp"

namespace hsplat::io {
namespace {

struct Property {
  std::string name;
  std::string type;
};

std::size_t type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  fail(ErrorCode::Format, "ply: unsupported property type '" + t + "'");
}

double read_binary(ByteReader& r, const std::string& t) {
  if (t == "float" || t == "float32") return r.f32();
  if (t == "double" || t == "float64") return r.f64();
  if (t == "uchar" || t == "uint8") return r.u8();
  if (t == "char" || t == "int8") return static_cast<std::int8_t>(r.u8());
  if (t == "ushort" || t == "uint16") {
    const std::uint16_t lo = r.u8(), hi = r.u8();
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  if (t == "short" || t == "int16") {
    const std::uint16_t lo = r.u8(), hi = r.u8();
    return static_cast<std::int16_t>(lo | (hi << 8));
  }
  if (t == "uint" || t == "uint32") return r.u32();
  if (t == "int" || t == "int32") return static_cast<std::int32_t>(r.u32());
  fail(ErrorCode::Format, "ply: unsupported property type '" + t + "'");
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyEncoding encoding) {
  require(cloud.intensity.size() == cloud.points.size(), ErrorCode::ShapeMismatch,
          "ply: intensity count differs from point count");
  std::string header = "ply\nformat ";
  header += encoding == PlyEncoding::Ascii ? "ascii" : "binary_little_endian";
  header += " 1.0\nelement vertex " + std::to_string(cloud.size()) +
            "\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\nend_header\n";
  ByteWriter w;
  w.raw(header);
  if (encoding == PlyEncoding::Ascii) {
    char buf[160];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      const int n = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g\n", static_cast<float>(p.x()),
                                  static_cast<float>(p.y()), static_cast<float>(p.z()),
                                  static_cast<float>(cloud.intensity[i]));
      w.raw({buf, static_cast<std::size_t>(n)});
    }
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      w.f32(static_cast<float>(p.x()));
      w.f32(static_cast<float>(p.y()));
      w.f32(static_cast<float>(p.z()));
      w.f32(static_cast<float>(cloud.intensity[i]));
    }
  }
  write_file_atomic(path, w.bytes());
}

PointCloud read_ply(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  const std::string end_marker = "end_header\n";
  const auto end = text.find(end_marker);
  if (text.rfind("ply\n", 0) != 0 || end == std::string::npos) fail(ErrorCode::Format, "not a ply file");
  std::istringstream header(text.substr(4, end - 4));
  std::string line, format;
  std::size_t count = 0;
  bool in_vertex = false, seen_vertex = false;
  std::vector<Property> props;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      ls >> format;
    } else if (kw == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex" || seen_vertex) fail(ErrorCode::Format, "ply: only a single vertex element is supported");
      in_vertex = seen_vertex = true;
    } else if (kw == "property") {
      Property p;
      ls >> p.type;
      if (p.type == "list") fail(ErrorCode::Format, "ply: list properties are not supported");
      ls >> p.name;
      if (!in_vertex) fail(ErrorCode::Format, "ply: property outside vertex element");
      type_size(p.type);
      props.push_back(p);
    } else if (kw == "comment" || kw == "obj_info" || kw.empty()) {
      continue;
    } else {
      fail(ErrorCode::Format, "ply: unexpected header line '" + line + "'");
    }
  }
  int ix = -1, iy = -1, iz = -1, ii = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") ix = static_cast<int>(i);
    if (props[i].name == "y") iy = static_cast<int>(i);
    if (props[i].name == "z") iz = static_cast<int>(i);
    if (props[i].name == "intensity") ii = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) fail(ErrorCode::Format, "ply: missing x/y/z properties");

  PointCloud cloud;
  cloud.points.reserve(count);
  cloud.intensity.reserve(count);
  std::vector<double> values(props.size());
  const std::size_t body = end + end_marker.size();
  if (format == "ascii") {
    std::istringstream in(text.substr(body));
    for (std::size_t v = 0; v < count; ++v) {
      for (double& x : values) {
        if (!(in >> x)) fail(ErrorCode::Format, "ply: truncated ascii vertex data");
      }
      cloud.points.emplace_back(values[ix], values[iy], values[iz]);
      cloud.intensity.push_back(ii >= 0 ? values[ii] : 0.0);
    }
  } else if (format == "binary_little_endian") {
    ByteReader r(std::span<const std::uint8_t>(bytes).subspan(body));
    for (std::size_t v = 0; v < count; ++v) {
      for (std::size_t p = 0; p < props.size(); ++p) values[p] = read_binary(r, props[p].type);
      cloud.points.emplace_back(values[ix], values[iy], values[iz]);
      cloud.intensity.push_back(ii >= 0 ? values[ii] : 0.0);
    }
  } else {
    fail(ErrorCode::Format, "ply: unsupported format '" + format + "'");
  }
  return cloud;
}

}  // namespace hsplat::io
