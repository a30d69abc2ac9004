#include "hsplat/io/planar_image.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include "hsplat/error.hpp"
#include "hsplat/io/atomic_file.hpp"
#include "hsplat/io/binary.hpp"

namespace hsplat::io {
namespace {

constexpr std::size_t kHeaderSize = 64;

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace

const std::vector<float>& PlanarImage::plane(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return planes[i];
  }
  fail(ErrorCode::Format, "planar image has no plane '" + name + "'");
}

std::vector<std::uint8_t> serialize_planar(const PlanarImage& img) {
  require(img.rows > 0 && img.cols > 0, ErrorCode::InvalidArgument, "planar image needs a positive size");
  require(!img.names.empty() && img.names.size() == img.planes.size(), ErrorCode::ShapeMismatch,
          "planar image: plane names and data differ");
  std::string header = "HSPLIMG1 rows=" + std::to_string(img.rows) + " cols=" + std::to_string(img.cols) + " planes=";
  for (std::size_t i = 0; i < img.names.size(); ++i) {
    require(valid_name(img.names[i]), ErrorCode::InvalidArgument, "planar image: bad plane name");
    if (i) header += ',';
    header += img.names[i];
  }
  require(header.size() < kHeaderSize, ErrorCode::InvalidArgument, "planar image header exceeds 64 bytes");
  header.resize(kHeaderSize - 1, ' ');
  header += '\n';

  const std::size_t n = static_cast<std::size_t>(img.rows) * img.cols;
  ByteWriter w;
  w.raw(header);
  for (const auto& p : img.planes) {
    require(p.size() == n, ErrorCode::ShapeMismatch, "planar image: plane size differs from rows x cols");
    for (float v : p) w.f32(v);
  }
  return std::move(w.bytes());
}

PlanarImage parse_planar(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) fail(ErrorCode::Format, "planar image truncated header");
  const std::string header(reinterpret_cast<const char*>(bytes.data()), kHeaderSize);
  if (header.rfind("HSPLIMG1 ", 0) != 0 || header.back() != '\n') fail(ErrorCode::Format, "not a planar image");
  std::istringstream in(header.substr(9));
  PlanarImage img;
  std::string tok;
  bool have_planes = false;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Format, "planar image: bad header token '" + tok + "'");
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    try {
      if (key == "rows") {
        img.rows = std::stoi(val);
      } else if (key == "cols") {
        img.cols = std::stoi(val);
      } else if (key == "planes") {
        std::stringstream ss(val);
        std::string name;
        while (std::getline(ss, name, ',')) {
          if (!valid_name(name)) fail(ErrorCode::Format, "planar image: bad plane name");
          img.names.push_back(name);
        }
        have_planes = true;
      } else {
        fail(ErrorCode::Format, "planar image: unknown header key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      fail(ErrorCode::Format, "planar image: bad header value '" + tok + "'");
    }
  }
  if (img.rows <= 0 || img.cols <= 0 || !have_planes || img.names.empty()) {
    fail(ErrorCode::Format, "planar image: incomplete header");
  }
  const std::size_t n = static_cast<std::size_t>(img.rows) * img.cols;
  if ((bytes.size() - kHeaderSize) != n * 4 * img.names.size()) {
    fail(ErrorCode::Format, "planar image: payload size does not match header");
  }
  ByteReader r(bytes.subspan(kHeaderSize));
  for (std::size_t p = 0; p < img.names.size(); ++p) {
    std::vector<float> plane(n);
    for (float& v : plane) v = r.f32();
    img.planes.push_back(std::move(plane));
  }
  return img;
}

void save_planar(const std::filesystem::path& path, const PlanarImage& img) {
  write_file_atomic(path, serialize_planar(img));
}

PlanarImage load_planar(const std::filesystem::path& path) { return parse_planar(read_file(path)); }

namespace {

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }
std::vector<double> to_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

}  // namespace

PlanarImage range_image_planes(const RangeImage& ri) {
  PlanarImage img;
  img.rows = ri.rows;
  img.cols = ri.cols;
  img.names = {"D", "I", "R", "A"};
  img.planes = {to_float(ri.depth), to_float(ri.intensity), to_float(ri.raydrop), to_float(ri.alpha)};
  return img;
}

RangeImage range_image_from_planes(const PlanarImage& img) {
  RangeImage ri(img.rows, img.cols);
  ri.depth = to_double(img.plane("D"));
  ri.intensity = to_double(img.plane("I"));
  ri.raydrop = to_double(img.plane("R"));
  ri.alpha = to_double(img.plane("A"));
  return ri;
}

PlanarImage camera_depth_planes(const FrameBuffer& fb) {
  PlanarImage img;
  img.rows = fb.height;
  img.cols = fb.width;
  img.names = {"D", "A"};
  img.planes = {to_float(fb.depth), to_float(fb.alpha)};
  return img;
}

}  // namespace hsplat::io
