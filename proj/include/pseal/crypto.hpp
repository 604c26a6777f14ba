#pragma once

// Template protection: the Secure Force 64-bit block cipher, the
// AES-256-CBC / SHA-256 hybrid scheme, and the two-share key image.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pseal/imaging.hpp"
#include "pseal/io.hpp"

namespace pseal::crypto {

using io::Bytes;

// -- Secure Force -------------------------------------------------------------

/// Five 16-bit round keys; k[4] = k[0] ^ k[1] ^ k[2] ^ k[3].
struct SfKeySchedule {
  std::array<std::uint16_t, 5> k{};
  bool operator==(const SfKeySchedule&) const = default;
};

/// PRESENT 4-bit S-box.
inline constexpr std::array<std::uint8_t, 16> kSbox{0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD,
                                                    0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2};

SfKeySchedule sf_key_expand(std::uint64_t key);
std::uint16_t sf_f(std::uint16_t x);

/// Blocks are four big-endian 16-bit words (A, B, C, D), A in the top bits.
/// Each of the five rounds XNORs the subkey into A and D, feeds F(A) into B
/// and F(D) into C, then (except after the last round) rotates the words one
/// place: (A, B, C, D) <- (B, C, D, A).
std::uint64_t sf_encrypt_block(std::uint64_t block, const SfKeySchedule& ks);
std::uint64_t sf_decrypt_block(std::uint64_t block, const SfKeySchedule& ks);

/// CBC with the 8-byte IV prepended; pads with n bytes of value n, n in [1,8].
Bytes sf_encrypt_bytes(std::span<const std::uint8_t> data, std::uint64_t key, std::uint64_t iv);
/// Throws kBadPadding on a corrupted tail, kTruncatedInput on bad lengths.
Bytes sf_decrypt_bytes(std::span<const std::uint8_t> data, std::uint64_t key);

// -- standard primitives (OpenSSL) -------------------------------------------

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws kIntegrityFailure on malformed input.
Bytes base64_decode(std::string_view text);

/// Single-block AES (ECB) for known-answer tests; key of 16, 24 or 32 bytes.
std::array<std::uint8_t, 16> aes_encrypt_block(std::span<const std::uint8_t> key,
                                               std::span<const std::uint8_t, 16> block);
std::array<std::uint8_t, 16> aes_decrypt_block(std::span<const std::uint8_t> key,
                                               std::span<const std::uint8_t, 16> block);

// -- hybrid AES-256 / SHA-256 ---------------------------------------------------

struct HybridCiphertext {
  std::array<std::uint8_t, 16> iv{};
  Bytes ct;
  Digest digest{};
  bool operator==(const HybridCiphertext&) const = default;
};

inline constexpr size_t kMaxKeyLength = 255;

/// ct = AES-256-CBC(base64(payload), SHA-256(key_string), iv); digest = SHA-256(payload).
HybridCiphertext hybrid_encrypt(std::span<const std::uint8_t> payload, std::span<const std::uint8_t> key_string,
                                const std::array<std::uint8_t, 16>& iv);
/// Throws kIntegrityFailure for any wrong key or tampering.
Bytes hybrid_decrypt(const HybridCiphertext& c, std::span<const std::uint8_t> key_string);

/// `BPC1`, version, iv, u32 ct length, ct, digest.
Bytes serialize_ciphertext(const HybridCiphertext& c);
HybridCiphertext deserialize_ciphertext(std::span<const std::uint8_t> bytes);

// -- two-share key image ------------------------------------------------------

inline constexpr int kShareWidth = 255;

/// Binary raster, one byte per cell: 0 = black, 1 = white.
using BitImage = imaging::BinaryMap;

struct KeyShares {
  BitImage key_image;
  BitImage share_s;
  BitImage share_t;
};

/// Row r of the key image holds key[r] black cells followed by white cells.
/// Rejects byte 0 and keys made only of 0xFF bytes with kInvalidKeyImage.
BitImage key_image(std::span<const std::uint8_t> key_string);
KeyShares make_key_shares(std::span<const std::uint8_t> key_string, std::uint64_t seed);
/// XORs the shares and counts black cells per row. Throws kShapeMismatch on
/// unequal sizes; kInvalidKeyImage on identical shares or a row encoding 0.
Bytes recover_key(const BitImage& share_s, const BitImage& share_t);

/// PGM with 0 = black and 255 = white.
imaging::GrayImage share_to_image(const BitImage& share);
BitImage image_to_share(const imaging::GrayImage& img);

}  // namespace pseal::crypto
