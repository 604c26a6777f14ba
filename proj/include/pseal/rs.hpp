#pragma once

// GF(256) arithmetic under x^8 + x^4 + x^3 + x^2 + 1 (0x11D) and systematic
// Reed-Solomon codes with generator roots alpha^0 .. alpha^(n_ec-1).

#include <cstdint>
#include <span>
#include <vector>

namespace pseal::rs {

using Bytes = std::vector<std::uint8_t>;

inline constexpr unsigned kFieldPoly = 0x11D;

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b);
/// Throws kInvalidField for a == 0.
std::uint8_t gf_inv(std::uint8_t a);
std::uint8_t gf_pow(std::uint8_t a, int e);
/// alpha^e for alpha = 0x02.
std::uint8_t gf_exp(int e);
/// Discrete log base alpha; throws kInvalidField for 0.
int gf_log(std::uint8_t a);

/// Generator polynomial coefficients, highest degree first (leading 1 included).
Bytes generator(int n_ec);

/// The n_ec parity bytes for `data` (codeword = data followed by parity).
Bytes encode(std::span<const std::uint8_t> data, int n_ec);

struct DecodeResult {
  Bytes data;      // corrected data bytes (parity stripped)
  int corrected = 0;
};

/// Corrects up to floor(n_ec/2) symbol errors in `received` (data + parity).
/// Throws kUncorrectable, with the estimated error count in the message, when
/// the word cannot be repaired consistently.
DecodeResult decode(std::span<const std::uint8_t> received, int n_ec);

}  // namespace pseal::rs
