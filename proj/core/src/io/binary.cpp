#include "hsplat/io/binary.hpp"

#include "hsplat/error.hpp"

namespace hsplat::io {

void ByteReader::need(std::size_t n) const {
  if (n > bytes_.size() - pos_) fail(ErrorCode::Format, "truncated binary data");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::string ByteReader::raw(std::size_t n) {
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::string ByteReader::str(std::size_t max_len) {
  const std::uint32_t n = u32();
  if (n > max_len) fail(ErrorCode::Format, "string field too long");
  return raw(n);
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace hsplat::io
