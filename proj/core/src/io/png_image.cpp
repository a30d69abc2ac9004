#include "hsplat/io/png_image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "hsplat/error.hpp"
#include "hsplat/io/atomic_file.hpp"

namespace hsplat::io {

void write_png(const std::filesystem::path& path, const Image& img) {
  require(img.channels == 1 || img.channels == 3, ErrorCode::InvalidArgument, "png needs 1 or 3 channels");
  require(img.width > 0 && img.height > 0, ErrorCode::InvalidArgument, "png needs a positive size");
  std::vector<std::uint8_t> pixels(img.data.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
  }
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width);
  desc.height = static_cast<png_uint_32>(img.height);
  desc.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    fail(ErrorCode::Io, std::string("png encode failed: ") + desc.message);
  }
  std::vector<std::uint8_t> encoded(size);
  if (!png_image_write_to_memory(&desc, encoded.data(), &size, 0, pixels.data(), 0, nullptr)) {
    fail(ErrorCode::Io, std::string("png encode failed: ") + desc.message);
  }
  encoded.resize(size);
  write_file_atomic(path, encoded);
}

Image read_png(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    fail(ErrorCode::Format, path.string() + ": " + desc.message);
  }
  const bool gray = (desc.format & PNG_FORMAT_FLAG_COLOR) == 0;
  desc.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&desc);
    fail(ErrorCode::Format, path.string() + ": " + desc.message);
  }
  Image img(static_cast<int>(desc.width), static_cast<int>(desc.height), channels);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = pixels[i] / 255.0;
  return img;
}

}  // namespace hsplat::io
