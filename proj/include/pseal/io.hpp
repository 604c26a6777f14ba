#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pseal::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Lowercase hex, two digits per byte.
std::string to_hex(std::span<const std::uint8_t> bytes);
/// Accepts upper or lower case; throws kBadConfig on odd length or bad digits.
Bytes from_hex(const std::string& hex);

// Big-endian packing used by every wire format in the project.
void put_u8(Bytes& out, std::uint8_t v);
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_bytes(Bytes& out, std::span<const std::uint8_t> v);

/// Bounds-checked big-endian reader; overruns raise kTruncatedInput.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::span<const std::uint8_t> take(size_t n);
  size_t remaining() const { return bytes_.size() - pos_; }
  size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace pseal::io
