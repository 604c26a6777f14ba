#include "pseal/io.hpp"

#include <fstream>
#include <iterator>

#include "pseal/error.hpp"

namespace pseal::io {

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return {b.begin(), b.end()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s += kDigits[b >> 4];
    s += kDigits[b & 15];
  }
  return s;
}

Bytes from_hex(const std::string& hex) {
  if (hex.size() % 2) fail(ErrorCode::kBadConfig, "hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(ErrorCode::kBadConfig, std::string("bad hex digit '") + c + "'");
  };
  Bytes out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }
void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
void put_u32(Bytes& out, std::uint32_t v) {
  put_u16(out, static_cast<std::uint16_t>(v >> 16));
  put_u16(out, static_cast<std::uint16_t>(v));
}
void put_u64(Bytes& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
  put_u32(out, static_cast<std::uint32_t>(v));
}
void put_bytes(Bytes& out, std::span<const std::uint8_t> v) { out.insert(out.end(), v.begin(), v.end()); }

std::span<const std::uint8_t> Reader::take(size_t n) {
  if (n > remaining()) fail(ErrorCode::kTruncatedInput, "input ends inside a field");
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}
std::uint8_t Reader::u8() { return take(1)[0]; }
std::uint16_t Reader::u16() {
  auto s = take(2);
  return static_cast<std::uint16_t>(s[0] << 8 | s[1]);
}
std::uint32_t Reader::u32() {
  const std::uint32_t hi = u16();
  return hi << 16 | u16();
}
std::uint64_t Reader::u64() {
  const std::uint64_t hi = u32();
  return hi << 32 | u32();
}

}  // namespace pseal::io
