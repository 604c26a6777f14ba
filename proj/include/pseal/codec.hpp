#pragma once

// QR (byte mode, versions 1-10) and the HCC2D color extension, which packs
// b bits per data module through a palette.
//
// Module values: for b = 1 a module is 1 when dark. For b > 1 every module is
// a palette index; function patterns use index 0 (black) and 1 (white).
//
// HCC2D layout: the data pipeline matches QR except that the block structure
// of the chosen version/level is repeated b times and the character count is
// always 16 bits. The interleaved bit stream is cut into b-bit symbols, one
// per data module in placement order. Masking XORs the index with 2^b - 1.
// Rasters carry a palette strip of 2^b reference modules in the quiet-zone
// column immediately right of the top-right finder, starting at row 0.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseal/imaging.hpp"

namespace pseal::codec {

using Bytes = std::vector<std::uint8_t>;

enum class EcLevel : std::uint8_t { kL, kM, kQ, kH };

char ec_level_char(EcLevel level);
EcLevel parse_ec_level(std::string_view s);

inline constexpr int kMinVersion = 1;
inline constexpr int kMaxVersion = 10;
inline constexpr int kQuietZone = 4;

/// Reference colors in palette order.
inline constexpr std::array<imaging::Rgb, 8> kPalette{{
    {0, 0, 0}, {1, 1, 1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1},
}};

struct SymbolMatrix {
  int version = 1;
  int size = 21;
  EcLevel ec_level = EcLevel::kM;
  int mask = 0;
  int bits_per_module = 1;
  std::vector<std::uint8_t> modules;  // row-major, size*size
  std::vector<imaging::Rgb> palette;  // 2^b entries when b > 1, else empty

  std::uint8_t at(int x, int y) const { return modules[static_cast<size_t>(y) * size + x]; }
  std::uint8_t& at(int x, int y) { return modules[static_cast<size_t>(y) * size + x]; }
  bool dark(int x, int y) const;
  bool operator==(const SymbolMatrix&) const = default;
};

inline int symbol_size(int version) { return 17 + 4 * version; }

// -- tables -------------------------------------------------------------------

struct BlockSpec {
  int data_len = 0;
  int ec_len = 0;
};

/// Modules available for codewords (and remainder bits) at `version`.
int raw_data_modules(int version);
/// ISO 18004 block structure, in transmission order.
std::vector<BlockSpec> block_structure(int version, EcLevel level);
int data_codewords(int version, EcLevel level);
/// Data-bit capacity (before segment headers): b * 8 * data_codewords.
int data_bits(int version, EcLevel level, int bits_per_module = 1);
/// Largest byte-mode payload that fits.
int byte_capacity(int version, EcLevel level, int bits_per_module = 1);

/// For every cell: -1 for function modules, otherwise the 0-based index of the
/// data module in placement order.
std::vector<int> placement_map(int version);

/// Counts of each placement defect; all zero for a sound layout.
struct PlacementAudit {
  int data_modules = 0;
  int unassigned = 0;
  int doubly_assigned = 0;
};
PlacementAudit audit_placement(int version);

// -- format / version info ----------------------------------------------------

/// 15-bit format word, BCH(15,5) with generator 0x537, masked by 0x5412.
std::uint16_t format_bits(EcLevel level, int mask);
/// 18-bit version word, BCH(18,6) with generator 0x1F25 (versions >= 7).
std::uint32_t version_bits(int version);

// -- encode / decode ------------------------------------------------------------

/// `version` = 0 picks the smallest fitting version; `mask` = -1 picks the
/// lowest-penalty mask (ties to the lowest id). Throws kPayloadTooLarge.
SymbolMatrix qr_encode(std::span<const std::uint8_t> payload, int version, EcLevel level, int mask = -1);
/// Throws kFormatInfoCorrupt or kUncorrectable.
Bytes qr_decode(const SymbolMatrix& matrix);

/// b = 1 yields exactly qr_encode's matrix.
SymbolMatrix hcc2d_encode(std::span<const std::uint8_t> payload, int bits_per_module, int version, EcLevel level,
                          int mask = -1);
Bytes hcc2d_decode(const SymbolMatrix& matrix);

/// Penalty of a candidate matrix (dark projection) under the four QR rules.
long mask_penalty(const SymbolMatrix& matrix);

// -- rasters ----------------------------------------------------------------------

/// One pixel per module with a 4-module quiet zone; includes the palette strip.
imaging::RgbImage render(const SymbolMatrix& matrix);
imaging::GrayImage render_gray(const SymbolMatrix& matrix);

/// Reads a one-sample-per-module raster (quiet zone included). Infers the
/// version from the size and b from the palette strip. Throws
/// kPaletteAmbiguous when two reference colors coincide.
SymbolMatrix read_raster(const imaging::RgbImage& raster);
SymbolMatrix read_raster(const imaging::GrayImage& raster);

/// Decodes rasters of either kind (dispatches on b).
Bytes decode_raster(const imaging::RgbImage& raster);
Bytes decode_raster(const imaging::GrayImage& raster);

/// `version ec_level mask b`, stored as the PNM comment line.
std::string sidecar_line(const SymbolMatrix& matrix);

/// PGM when b = 1, otherwise PPM.
void write_symbol(const std::filesystem::path& path, const SymbolMatrix& matrix);
Bytes read_symbol_file(const std::filesystem::path& path);

}  // namespace pseal::codec
