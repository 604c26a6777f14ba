#include "pseal/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <bit>
#include <memory>
#include <random>

#include "pseal/error.hpp"

namespace pseal::crypto {

namespace {

std::uint64_t substitute64(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int n = 0; n < 16; ++n) out |= std::uint64_t{kSbox[(v >> (4 * n)) & 15]} << (4 * n);
  return out;
}

// Bit i moves to position 13*i mod 64.
std::uint64_t permute64(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int i = 0; i < 64; ++i)
    if (v >> i & 1) out |= std::uint64_t{1} << ((13 * i) % 64);
  return out;
}

std::uint16_t fold16(std::uint64_t v) {
  return static_cast<std::uint16_t>(v ^ v >> 16 ^ v >> 32 ^ v >> 48);
}

std::uint8_t rotl4(std::uint8_t n, int r) {
  r &= 3;
  return static_cast<std::uint8_t>(((n << r) | (n >> (4 - r))) & 15);
}

struct Words {
  std::uint16_t a, b, c, d;
};

Words split(std::uint64_t v) {
  return {static_cast<std::uint16_t>(v >> 48), static_cast<std::uint16_t>(v >> 32),
          static_cast<std::uint16_t>(v >> 16), static_cast<std::uint16_t>(v)};
}

std::uint64_t join(const Words& w) {
  return std::uint64_t{w.a} << 48 | std::uint64_t{w.b} << 32 | std::uint64_t{w.c} << 16 | w.d;
}

std::uint64_t load_be64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | p[i];
  return v;
}

void store_be64(std::uint64_t v, std::uint8_t* p) {
  for (int i = 7; i >= 0; --i) {
    p[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
}

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx new_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) fail(ErrorCode::kIo, "EVP_CIPHER_CTX_new failed");
  return ctx;
}

const EVP_CIPHER* ecb_cipher(size_t key_len) {
  switch (key_len) {
    case 16: return EVP_aes_128_ecb();
    case 24: return EVP_aes_192_ecb();
    case 32: return EVP_aes_256_ecb();
    default: fail(ErrorCode::kInvalidField, "AES key must be 16, 24 or 32 bytes");
  }
}

std::array<std::uint8_t, 16> aes_block(std::span<const std::uint8_t> key, std::span<const std::uint8_t, 16> in,
                                       bool encrypt) {
  auto ctx = new_ctx();
  std::array<std::uint8_t, 16> out{};
  int len = 0;
  if (EVP_CipherInit_ex(ctx.get(), ecb_cipher(key.size()), nullptr, key.data(), nullptr, encrypt ? 1 : 0) != 1 ||
      EVP_CIPHER_CTX_set_padding(ctx.get(), 0) != 1 ||
      EVP_CipherUpdate(ctx.get(), out.data(), &len, in.data(), 16) != 1 || len != 16)
    fail(ErrorCode::kIo, "AES block operation failed");
  return out;
}

void check_key_string(std::span<const std::uint8_t> key_string) {
  if (key_string.empty()) fail(ErrorCode::kEmptyInput, "key string is empty");
  if (key_string.size() > kMaxKeyLength)
    fail(ErrorCode::kKeyTooLong, "key string longer than " + std::to_string(kMaxKeyLength) + " bytes");
}

}  // namespace

// -- Secure Force -------------------------------------------------------------

SfKeySchedule sf_key_expand(std::uint64_t key) {
  SfKeySchedule ks;
  std::uint64_t r = key;
  for (int j = 1; j <= 4; ++j) {
    const std::uint64_t rc = 0x0101010101010101ULL * static_cast<std::uint64_t>(j);
    r = permute64(std::rotl(substitute64(r ^ rc), 7));
    ks.k[j - 1] = fold16(r);
  }
  ks.k[4] = ks.k[0] ^ ks.k[1] ^ ks.k[2] ^ ks.k[3];
  return ks;
}

std::uint16_t sf_f(std::uint16_t x) {
  std::uint8_t m[4];
  for (int j = 0; j < 4; ++j) m[j] = rotl4(static_cast<std::uint8_t>(x >> (4 * j) & 15), j);
  return static_cast<std::uint16_t>(kSbox[m[3] & m[1]] << 12 | kSbox[m[2] & m[0]] << 8 |
                                    kSbox[m[3] | m[0]] << 4 | kSbox[m[2] | m[1]]);
}

std::uint64_t sf_encrypt_block(std::uint64_t block, const SfKeySchedule& ks) {
  Words w = split(block);
  for (int i = 0; i < 5; ++i) {
    w.a = static_cast<std::uint16_t>(~(w.a ^ ks.k[i]));
    w.d = static_cast<std::uint16_t>(~(w.d ^ ks.k[i]));
    w.b ^= sf_f(w.a);
    w.c ^= sf_f(w.d);
    if (i < 4) w = {w.b, w.c, w.d, w.a};
  }
  return join(w);
}

std::uint64_t sf_decrypt_block(std::uint64_t block, const SfKeySchedule& ks) {
  Words w = split(block);
  for (int i = 4; i >= 0; --i) {
    if (i < 4) w = {w.d, w.a, w.b, w.c};
    w.b ^= sf_f(w.a);
    w.c ^= sf_f(w.d);
    w.a = static_cast<std::uint16_t>(~w.a ^ ks.k[i]);
    w.d = static_cast<std::uint16_t>(~w.d ^ ks.k[i]);
  }
  return join(w);
}

Bytes sf_encrypt_bytes(std::span<const std::uint8_t> data, std::uint64_t key, std::uint64_t iv) {
  const SfKeySchedule ks = sf_key_expand(key);
  const size_t pad = 8 - data.size() % 8;
  Bytes plain(data.begin(), data.end());
  plain.insert(plain.end(), pad, static_cast<std::uint8_t>(pad));

  Bytes out(8 + plain.size());
  store_be64(iv, out.data());
  std::uint64_t chain = iv;
  for (size_t off = 0; off < plain.size(); off += 8) {
    chain = sf_encrypt_block(load_be64(plain.data() + off) ^ chain, ks);
    store_be64(chain, out.data() + 8 + off);
  }
  return out;
}

Bytes sf_decrypt_bytes(std::span<const std::uint8_t> data, std::uint64_t key) {
  if (data.size() < 16 || data.size() % 8)
    fail(ErrorCode::kTruncatedInput, "SF ciphertext must be IV plus a whole number of blocks");
  const SfKeySchedule ks = sf_key_expand(key);
  std::uint64_t chain = load_be64(data.data());
  Bytes out(data.size() - 8);
  for (size_t off = 8; off < data.size(); off += 8) {
    const std::uint64_t c = load_be64(data.data() + off);
    store_be64(sf_decrypt_block(c, ks) ^ chain, out.data() + off - 8);
    chain = c;
  }
  const std::uint8_t pad = out.back();
  if (pad < 1 || pad > 8) fail(ErrorCode::kBadPadding, "SF padding length out of range");
  for (size_t i = out.size() - pad; i < out.size(); ++i)
    if (out[i] != pad) fail(ErrorCode::kBadPadding, "SF padding bytes inconsistent");
  out.resize(out.size() - pad);
  return out;
}

// -- standard primitives --------------------------------------------------------

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d{};
  SHA256(data.data(), data.size(), d.data());
  return d;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                static_cast<int>(data.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.size() % 4) fail(ErrorCode::kIntegrityFailure, "base64 text length not a multiple of 4");
  Bytes out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) fail(ErrorCode::kIntegrityFailure, "malformed base64 text");
  // EVP_DecodeBlock keeps the zero bytes that stand in for '=' padding.
  size_t len = static_cast<size_t>(n);
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() > 1 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

std::array<std::uint8_t, 16> aes_encrypt_block(std::span<const std::uint8_t> key,
                                               std::span<const std::uint8_t, 16> block) {
  return aes_block(key, block, true);
}

std::array<std::uint8_t, 16> aes_decrypt_block(std::span<const std::uint8_t> key,
                                               std::span<const std::uint8_t, 16> block) {
  return aes_block(key, block, false);
}

// -- hybrid ---------------------------------------------------------------------

HybridCiphertext hybrid_encrypt(std::span<const std::uint8_t> payload, std::span<const std::uint8_t> key_string,
                                const std::array<std::uint8_t, 16>& iv) {
  check_key_string(key_string);
  const std::string b1 = base64_encode(payload);
  const Digest key = sha256(key_string);

  HybridCiphertext c;
  c.iv = iv;
  c.digest = sha256(payload);
  c.ct.resize(b1.size() + 16);
  auto ctx = new_ctx();
  int len = 0, tail = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, key.data(), iv.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), c.ct.data(), &len, reinterpret_cast<const unsigned char*>(b1.data()),
                        static_cast<int>(b1.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), c.ct.data() + len, &tail) != 1)
    fail(ErrorCode::kIo, "AES-256-CBC encryption failed");
  c.ct.resize(static_cast<size_t>(len + tail));
  return c;
}

Bytes hybrid_decrypt(const HybridCiphertext& c, std::span<const std::uint8_t> key_string) {
  check_key_string(key_string);
  if (c.ct.empty() || c.ct.size() % 16) fail(ErrorCode::kIntegrityFailure, "ciphertext length not a block multiple");
  const Digest key = sha256(key_string);

  std::string b1(c.ct.size(), '\0');
  auto ctx = new_ctx();
  int len = 0, tail = 0;
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, key.data(), c.iv.data()) != 1 ||
      EVP_DecryptUpdate(ctx.get(), reinterpret_cast<unsigned char*>(b1.data()), &len, c.ct.data(),
                        static_cast<int>(c.ct.size())) != 1 ||
      EVP_DecryptFinal_ex(ctx.get(), reinterpret_cast<unsigned char*>(b1.data()) + len, &tail) != 1)
    fail(ErrorCode::kIntegrityFailure, "decryption failed; wrong key or tampered ciphertext");
  b1.resize(static_cast<size_t>(len + tail));

  Bytes payload = base64_decode(b1);
  if (sha256(payload) != c.digest) fail(ErrorCode::kIntegrityFailure, "payload digest mismatch");
  return payload;
}

Bytes serialize_ciphertext(const HybridCiphertext& c) {
  Bytes out{'B', 'P', 'C', '1'};
  io::put_u8(out, 1);
  io::put_bytes(out, c.iv);
  io::put_u32(out, static_cast<std::uint32_t>(c.ct.size()));
  io::put_bytes(out, c.ct);
  io::put_bytes(out, c.digest);
  return out;
}

HybridCiphertext deserialize_ciphertext(std::span<const std::uint8_t> bytes) {
  io::Reader r(bytes);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), "BPC1")) fail(ErrorCode::kBadMagic, "not a BPC1 ciphertext");
  if (r.u8() != 1) fail(ErrorCode::kInvalidField, "unsupported BPC1 version");
  HybridCiphertext c;
  const auto iv = r.take(16);
  std::copy(iv.begin(), iv.end(), c.iv.begin());
  const auto ct = r.take(r.u32());
  c.ct.assign(ct.begin(), ct.end());
  const auto digest = r.take(32);
  std::copy(digest.begin(), digest.end(), c.digest.begin());
  if (r.remaining()) fail(ErrorCode::kInvalidField, "trailing bytes after BPC1 ciphertext");
  return c;
}

// -- key shares -----------------------------------------------------------------

BitImage key_image(std::span<const std::uint8_t> key_string) {
  check_key_string(key_string);
  BitImage img(kShareWidth, static_cast<int>(key_string.size()), 1);
  for (int r = 0; r < img.height(); ++r) {
    const int count = key_string[static_cast<size_t>(r)];
    if (count == 0) fail(ErrorCode::kInvalidKeyImage, "key byte 0 cannot be encoded in a share image");
    for (int x = 0; x < count; ++x) img.at(x, r) = 0;
  }
  // An all-0xFF key blackens every cell, which makes the two shares identical.
  if (std::all_of(img.data().begin(), img.data().end(), [](std::uint8_t v) { return v == 0; }))
    fail(ErrorCode::kInvalidKeyImage, "a key of only 0xFF bytes yields identical shares");
  return img;
}

KeyShares make_key_shares(std::span<const std::uint8_t> key_string, std::uint64_t seed) {
  KeyShares out;
  out.key_image = key_image(key_string);
  out.share_s = BitImage(out.key_image.width(), out.key_image.height());
  out.share_t = out.share_s;
  std::mt19937_64 rng(seed);
  std::uint64_t bits = 0;
  int avail = 0;
  for (size_t i = 0; i < out.key_image.size(); ++i) {
    if (avail == 0) {
      bits = rng();
      avail = 64;
    }
    const auto s = static_cast<std::uint8_t>(bits & 1);
    bits >>= 1;
    --avail;
    out.share_s.data()[i] = s;
    out.share_t.data()[i] = s ^ out.key_image.data()[i];
  }
  return out;
}

Bytes recover_key(const BitImage& share_s, const BitImage& share_t) {
  if (!share_s.same_shape(share_t)) fail(ErrorCode::kShapeMismatch, "key shares differ in size");
  if (share_s.width() != kShareWidth)
    fail(ErrorCode::kInvalidKeyImage, "key shares must be " + std::to_string(kShareWidth) + " cells wide");
  if (share_s == share_t) fail(ErrorCode::kInvalidKeyImage, "identical shares carry no key");
  Bytes key(static_cast<size_t>(share_s.height()));
  for (int r = 0; r < share_s.height(); ++r) {
    int zeros = 0;
    for (int x = 0; x < share_s.width(); ++x) zeros += (share_s.at(x, r) ^ share_t.at(x, r)) == 0;
    if (zeros == 0) fail(ErrorCode::kInvalidKeyImage, "row " + std::to_string(r) + " encodes byte 0");
    key[static_cast<size_t>(r)] = static_cast<std::uint8_t>(zeros);
  }
  return key;
}

imaging::GrayImage share_to_image(const BitImage& share) {
  imaging::GrayImage img(share.width(), share.height());
  for (size_t i = 0; i < share.size(); ++i) img.data()[i] = share.data()[i] ? 1.0 : 0.0;
  return img;
}

BitImage image_to_share(const imaging::GrayImage& img) {
  BitImage share(img.width(), img.height());
  for (size_t i = 0; i < img.size(); ++i) share.data()[i] = img.data()[i] >= 0.5 ? 1 : 0;
  return share;
}

}  // namespace pseal::crypto
