#pragma once

// The passport payload: an MRZ-style demographic record, the biometric
// template, their binary forms and the two encrypted barcodes built from them.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pseal/codec.hpp"
#include "pseal/crypto.hpp"
#include "pseal/geometry.hpp"
#include "pseal/handgeom.hpp"
#include "pseal/io.hpp"
#include "pseal/marks.hpp"

namespace pseal::payload {

using io::Bytes;

/// ICAO 9303 check digit: weights 7,3,1; digits as themselves, A..Z = 10..35,
/// '<' = 0. Throws kInvalidMrzCharacter on an empty field or a character
/// outside [0-9A-Z<].
int mrz_check_digit(std::string_view field);

struct Demographic {
  std::string document_type;    // 1-2 MRZ characters, e.g. "P"
  std::string issuing_state;    // 3 MRZ characters
  std::string holder_name;      // free text, nonempty
  std::string document_number;  // 1-9 MRZ characters
  std::string nationality;      // 3 MRZ characters
  std::string date_of_birth;    // YYMMDD
  char sex = 'X';               // M, F or X
  std::string date_of_expiry;   // YYMMDD
  std::string optional_data;    // 0-14 MRZ characters
  bool operator==(const Demographic&) const = default;
};

/// Throws kInvalidMrzCharacter or kInvalidField.
void validate(const Demographic& d);

/// Composite digit over document number, birth date, expiry and optional
/// data, each padded with '<' to its TD3 width and followed by its own digit.
int composite_check_digit(const Demographic& d);

/// `BPD1`, version, nine u16-length-prefixed fields, then the document,
/// birth, expiry and composite check digits (verified on read, kChecksumMismatch).
Bytes serialize_demographic(const Demographic& d);
Demographic deserialize_demographic(std::span<const std::uint8_t> bytes);

/// `key = value` lines with the field names above.
Demographic parse_demographic(std::string_view text);
std::string format_demographic(const Demographic& d);

struct BiometricTemplate {
  geometry::Schema schema = geometry::Schema::kFace90;
  std::vector<geometry::Point> landmarks;
  marks::MarkSet marks;
  std::optional<handgeom::HandFeatureVector> hand;
  std::uint64_t created_at = 0;
  bool operator==(const BiometricTemplate&) const = default;
};

/// Wire resolutions.
inline constexpr double kLandmarkScale = 16;
inline constexpr double kHistScale = 1e4;
inline constexpr double kHandScale = 1e2;

/// Rounds every field to its wire resolution and recomputes the derived mark
/// fields (center, stats), so quantize(t) round-trips bit-exactly.
BiometricTemplate quantize(const BiometricTemplate& t);

/// `BPT1`, version, created_at, then u32-length-prefixed landmark, mark and
/// hand sections, then SHA-256 of everything before it. Throws kInvalidField
/// for values outside the wire ranges.
Bytes serialize_template(const BiometricTemplate& t);
/// Throws kTruncatedInput, kBadMagic, kChecksumMismatch or kInvalidField.
BiometricTemplate deserialize_template(std::span<const std::uint8_t> bytes);

// -- barcodes -------------------------------------------------------------------

enum class BiometricCipher { kSecureForce, kHybrid };

struct BarcodeKeys {
  std::string demographic_key;         // hybrid key string
  std::uint64_t biometric_sf_key = 0;  // Secure Force key
  std::string biometric_key;           // hybrid key string for the biometric path
};

struct BarcodeIvs {
  std::array<std::uint8_t, 16> demographic{};
  std::uint64_t biometric_sf = 0;
  std::array<std::uint8_t, 16> biometric{};
};

struct CodecConfig {
  codec::EcLevel demographic_level = codec::EcLevel::kM;
  int demographic_version = 0;
  BiometricCipher cipher = BiometricCipher::kSecureForce;
  int bits_per_module = 3;  // 1 selects plain QR for the biometric symbol
  codec::EcLevel biometric_level = codec::EcLevel::kL;
  int biometric_version = 0;
};

struct PassportBarcodes {
  codec::SymbolMatrix demographic;
  codec::SymbolMatrix biometric;
};

/// Symbol contents. The demographic symbol carries a BPC1 container. The
/// biometric symbol carries the deflated template, sealed as a `BPS1`
/// envelope (magic, version, IV-prefixed SF-CBC bytes) or as a BPC1 container.
Bytes seal_demographic(const Demographic& d, const BarcodeKeys& keys, const BarcodeIvs& ivs);
Bytes seal_template(const BiometricTemplate& t, BiometricCipher cipher, const BarcodeKeys& keys,
                    const BarcodeIvs& ivs);
Demographic open_demographic(std::span<const std::uint8_t> sealed, const BarcodeKeys& keys);
/// Dispatches on the container magic. Decryption failures surface as
/// kIntegrityFailure or kBadPadding.
BiometricTemplate open_template(std::span<const std::uint8_t> sealed, const BarcodeKeys& keys);

/// Smallest bits-per-module in {1,2,3} whose version-10 capacity at `level`
/// holds `bytes`, or nullopt.
std::optional<int> suggest_bits_per_module(size_t bytes, codec::EcLevel level);

/// Throws kPayloadTooLarge (naming the suggested b when one exists).
PassportBarcodes build_passport_barcodes(const Demographic& d, const BiometricTemplate& t, const BarcodeKeys& keys,
                                         const BarcodeIvs& ivs, const CodecConfig& cfg = {});

struct OpenedPassport {
  Demographic demographic;
  BiometricTemplate biometric;
};

OpenedPassport open_passport_barcodes(const PassportBarcodes& symbols, const BarcodeKeys& keys);

/// zlib deflate/inflate; a corrupt stream raises kIntegrityFailure.
Bytes deflate(std::span<const std::uint8_t> data);
Bytes inflate(std::span<const std::uint8_t> data);

}  // namespace pseal::payload
