#include "pseal/codec.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include "pseal/error.hpp"
#include "pseal/io.hpp"
#include "pseal/rs.hpp"

namespace pseal::codec {

namespace {

// Indexed [level][version], levels in L, M, Q, H order.
constexpr int kEcPerBlock[4][kMaxVersion + 1] = {
    {-1, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18},
    {-1, 10, 16, 26, 18, 24, 16, 18, 22, 22, 26},
    {-1, 13, 22, 18, 26, 18, 24, 18, 22, 20, 24},
    {-1, 17, 28, 22, 16, 22, 28, 26, 26, 24, 28},
};
constexpr int kNumBlocks[4][kMaxVersion + 1] = {
    {-1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4},
    {-1, 1, 1, 1, 2, 2, 4, 4, 4, 5, 5},
    {-1, 1, 1, 2, 2, 4, 4, 6, 6, 8, 8},
    {-1, 1, 1, 2, 4, 4, 4, 5, 6, 8, 8},
};

std::vector<int> alignment_positions(int version) {
  static const std::vector<int> kTable[kMaxVersion + 1] = {
      {}, {}, {6, 18}, {6, 22}, {6, 26}, {6, 30}, {6, 34}, {6, 22, 38}, {6, 24, 42}, {6, 26, 46}, {6, 28, 50},
  };
  return kTable[version];
}

void check_version(int version) {
  if (version < kMinVersion || version > kMaxVersion)
    fail(ErrorCode::kInvalidField, "version must be in [1,10], got " + std::to_string(version));
}

void check_bits(int b) {
  if (b < 1 || b > 3) fail(ErrorCode::kInvalidField, "bits per module must be 1, 2 or 3");
}

int level_index(EcLevel level) { return static_cast<int>(level); }

// Format-info level field: L=01, M=00, Q=11, H=10.
int level_format_bits(EcLevel level) {
  constexpr int kBits[4] = {1, 0, 3, 2};
  return kBits[level_index(level)];
}

bool mask_bit(int mask, int x, int y) {
  switch (mask) {
    case 0: return (x + y) % 2 == 0;
    case 1: return y % 2 == 0;
    case 2: return x % 3 == 0;
    case 3: return (x + y) % 3 == 0;
    case 4: return (x / 3 + y / 2) % 2 == 0;
    case 5: return x * y % 2 + x * y % 3 == 0;
    case 6: return (x * y % 2 + x * y % 3) % 2 == 0;
    default: return ((x + y) % 2 + x * y % 3) % 2 == 0;
  }
}

// Fixed patterns of a version: `function` flags plus the dark state of each.
struct Skeleton {
  int size = 0;
  std::vector<std::uint8_t> function;
  std::vector<std::uint8_t> dark;

  void set(int x, int y, bool d) {
    function[static_cast<size_t>(y) * size + x] = 1;
    dark[static_cast<size_t>(y) * size + x] = d ? 1 : 0;
  }
  bool is_function(int x, int y) const { return function[static_cast<size_t>(y) * size + x] != 0; }
};

void draw_format(Skeleton& s, std::uint16_t bits) {
  auto bit = [&](int i) { return (bits >> i & 1) != 0; };
  const int n = s.size;
  for (int i = 0; i <= 5; ++i) s.set(8, i, bit(i));
  s.set(8, 7, bit(6));
  s.set(8, 8, bit(7));
  s.set(7, 8, bit(8));
  for (int i = 9; i < 15; ++i) s.set(14 - i, 8, bit(i));
  for (int i = 0; i < 8; ++i) s.set(n - 1 - i, 8, bit(i));
  for (int i = 8; i < 15; ++i) s.set(8, n - 15 + i, bit(i));
  s.set(8, n - 8, true);
}

Skeleton skeleton(int version) {
  Skeleton s;
  s.size = symbol_size(version);
  const int n = s.size;
  s.function.assign(static_cast<size_t>(n) * n, 0);
  s.dark.assign(static_cast<size_t>(n) * n, 0);

  for (int i = 0; i < n; ++i) {
    s.set(6, i, i % 2 == 0);
    s.set(i, 6, i % 2 == 0);
  }
  const int centers[3][2] = {{3, 3}, {n - 4, 3}, {3, n - 4}};
  for (const auto& c : centers)
    for (int dy = -4; dy <= 4; ++dy)
      for (int dx = -4; dx <= 4; ++dx) {
        const int x = c[0] + dx, y = c[1] + dy;
        if (x < 0 || y < 0 || x >= n || y >= n) continue;
        const int d = std::max(std::abs(dx), std::abs(dy));
        s.set(x, y, d != 2 && d != 4);
      }
  const auto pos = alignment_positions(version);
  const int k = static_cast<int>(pos.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if ((i == 0 && j == 0) || (i == 0 && j == k - 1) || (i == k - 1 && j == 0)) continue;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          s.set(pos[i] + dx, pos[j] + dy, std::max(std::abs(dx), std::abs(dy)) != 1);
    }
  // Reserve format areas; real bits are drawn per mask.
  draw_format(s, 0);
  if (version >= 7) {
    const std::uint32_t v = version_bits(version);
    for (int i = 0; i < 18; ++i) {
      const bool d = (v >> i & 1) != 0;
      const int a = n - 11 + i % 3, b = i / 3;
      s.set(a, b, d);
      s.set(b, a, d);
    }
  }
  return s;
}

// Data cells in zigzag placement order.
std::vector<std::pair<int, int>> data_cells(const Skeleton& s) {
  std::vector<std::pair<int, int>> cells;
  const int n = s.size;
  for (int right = n - 1; right >= 1; right -= 2) {
    if (right == 6) right = 5;
    for (int vert = 0; vert < n; ++vert)
      for (int j = 0; j < 2; ++j) {
        const int x = right - j;
        const bool upward = ((right + 1) & 2) == 0;
        const int y = upward ? n - 1 - vert : vert;
        if (!s.is_function(x, y)) cells.emplace_back(x, y);
      }
  }
  return cells;
}

std::vector<BlockSpec> repeated_blocks(int version, EcLevel level, int b) {
  const auto one = block_structure(version, level);
  std::vector<BlockSpec> all;
  for (int i = 0; i < b; ++i) all.insert(all.end(), one.begin(), one.end());
  return all;
}

int count_bits(int version, int b) { return (b == 1 && version < 10) ? 8 : 16; }

class BitWriter {
 public:
  void put(std::uint32_t v, int n) {
    for (int i = n - 1; i >= 0; --i) bits_.push_back(static_cast<std::uint8_t>(v >> i & 1));
  }
  size_t size() const { return bits_.size(); }
  Bytes bytes() const {
    Bytes out(bits_.size() / 8, 0);
    for (size_t i = 0; i < out.size() * 8; ++i) out[i / 8] |= static_cast<std::uint8_t>(bits_[i] << (7 - i % 8));
    return out;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

Bytes data_stream(std::span<const std::uint8_t> payload, int version, EcLevel level, int b) {
  const size_t capacity_bits = static_cast<size_t>(b) * data_codewords(version, level) * 8;
  BitWriter w;
  w.put(0b0100, 4);
  w.put(static_cast<std::uint32_t>(payload.size()), count_bits(version, b));
  for (auto byte : payload) w.put(byte, 8);
  w.put(0, static_cast<int>(std::min<size_t>(4, capacity_bits - w.size())));
  w.put(0, static_cast<int>((8 - w.size() % 8) % 8));
  Bytes out = w.bytes();
  for (std::uint8_t pad = 0xEC; out.size() * 8 < capacity_bits; pad ^= 0xEC ^ 0x11) out.push_back(pad);
  return out;
}

Bytes interleave(std::span<const std::uint8_t> data, const std::vector<BlockSpec>& blocks) {
  std::vector<Bytes> d, e;
  size_t off = 0;
  size_t max_d = 0, max_e = 0;
  for (const auto& bs : blocks) {
    d.emplace_back(data.begin() + off, data.begin() + off + bs.data_len);
    off += bs.data_len;
    e.push_back(rs::encode(d.back(), bs.ec_len));
    max_d = std::max(max_d, d.back().size());
    max_e = std::max(max_e, e.back().size());
  }
  Bytes out;
  for (size_t i = 0; i < max_d; ++i)
    for (const auto& blk : d)
      if (i < blk.size()) out.push_back(blk[i]);
  for (size_t i = 0; i < max_e; ++i)
    for (const auto& blk : e)
      if (i < blk.size()) out.push_back(blk[i]);
  return out;
}

Bytes deinterleave_and_correct(std::span<const std::uint8_t> codewords, const std::vector<BlockSpec>& blocks) {
  std::vector<Bytes> words(blocks.size());
  size_t max_d = 0, max_e = 0;
  for (const auto& bs : blocks) {
    max_d = std::max(max_d, static_cast<size_t>(bs.data_len));
    max_e = std::max(max_e, static_cast<size_t>(bs.ec_len));
  }
  size_t k = 0;
  for (size_t i = 0; i < max_d; ++i)
    for (size_t j = 0; j < blocks.size(); ++j)
      if (i < static_cast<size_t>(blocks[j].data_len)) words[j].push_back(codewords[k++]);
  for (size_t i = 0; i < max_e; ++i)
    for (size_t j = 0; j < blocks.size(); ++j)
      if (i < static_cast<size_t>(blocks[j].ec_len)) words[j].push_back(codewords[k++]);
  Bytes data;
  for (size_t j = 0; j < blocks.size(); ++j) {
    const auto r = rs::decode(words[j], blocks[j].ec_len);
    data.insert(data.end(), r.data.begin(), r.data.end());
  }
  return data;
}

Bytes parse_segment(std::span<const std::uint8_t> data, int version, int b) {
  const size_t total_bits = data.size() * 8;
  size_t pos = 0;
  auto take = [&](int n) {
    if (pos + static_cast<size_t>(n) > total_bits) fail(ErrorCode::kTruncatedInput, "segment runs past the data");
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i, ++pos) v = v << 1 | (data[pos / 8] >> (7 - pos % 8) & 1);
    return v;
  };
  if (take(4) != 0b0100) fail(ErrorCode::kInvalidField, "only byte-mode segments are supported");
  const std::uint32_t count = take(count_bits(version, b));
  Bytes out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(static_cast<std::uint8_t>(take(8)));
  return out;
}

bool dark_value(std::uint8_t v, int b) { return b == 1 ? v != 0 : v % 2 == 0; }

std::uint8_t black_value(int b) { return b == 1 ? 1 : 0; }
std::uint8_t white_value(int b) { return b == 1 ? 0 : 1; }

SymbolMatrix encode_impl(std::span<const std::uint8_t> payload, int b, int version, EcLevel level, int forced_mask) {
  check_bits(b);
  if (forced_mask < -1 || forced_mask > 7) fail(ErrorCode::kInvalidField, "mask must be in [0,7]");
  if (version == 0) {
    for (int v = kMinVersion; v <= kMaxVersion; ++v)
      if (static_cast<int>(payload.size()) <= byte_capacity(v, level, b)) {
        version = v;
        break;
      }
    if (version == 0)
      fail(ErrorCode::kPayloadTooLarge, std::to_string(payload.size()) + " bytes exceed the version-10 " +
                                            std::string(1, ec_level_char(level)) + " capacity of " +
                                            std::to_string(byte_capacity(kMaxVersion, level, b)));
  }
  check_version(version);
  const int cap = byte_capacity(version, level, b);
  if (static_cast<int>(payload.size()) > cap)
    fail(ErrorCode::kPayloadTooLarge, std::to_string(payload.size()) + " bytes exceed the capacity of " +
                                          std::to_string(cap) + " at version " + std::to_string(version));

  const auto blocks = repeated_blocks(version, level, b);
  const Bytes codewords = interleave(data_stream(payload, version, level, b), blocks);

  Skeleton sk = skeleton(version);
  const auto cells = data_cells(sk);
  std::vector<std::uint8_t> symbols(cells.size(), 0);
  const size_t nbits = codewords.size() * 8;
  for (size_t k = 0; k < cells.size(); ++k) {
    std::uint8_t v = 0;
    for (int i = 0; i < b; ++i) {
      const size_t bit = k * b + i;
      const std::uint8_t x = bit < nbits ? (codewords[bit / 8] >> (7 - bit % 8) & 1) : 0;
      v = static_cast<std::uint8_t>(v << 1 | x);
    }
    symbols[k] = v;
  }

  SymbolMatrix best;
  long best_penalty = std::numeric_limits<long>::max();
  const std::uint8_t flip = static_cast<std::uint8_t>((1 << b) - 1);
  for (int mask = 0; mask < 8; ++mask) {
    if (forced_mask >= 0 && mask != forced_mask) continue;
    draw_format(sk, format_bits(level, mask));
    SymbolMatrix m;
    m.version = version;
    m.size = sk.size;
    m.ec_level = level;
    m.mask = mask;
    m.bits_per_module = b;
    m.modules.resize(sk.dark.size());
    for (size_t i = 0; i < sk.dark.size(); ++i) m.modules[i] = sk.dark[i] ? black_value(b) : white_value(b);
    for (size_t k = 0; k < cells.size(); ++k) {
      const auto [x, y] = cells[k];
      m.at(x, y) = mask_bit(mask, x, y) ? symbols[k] ^ flip : symbols[k];
    }
    if (b > 1) m.palette.assign(kPalette.begin(), kPalette.begin() + (1 << b));
    const long p = mask_penalty(m);
    if (p < best_penalty) {
      best_penalty = p;
      best = std::move(m);
    }
  }
  return best;
}

int hamming(std::uint32_t a, std::uint32_t b) { return std::popcount(a ^ b); }

// Returns (level, mask) of the nearest valid format word within distance 3.
std::pair<EcLevel, int> read_format(const SymbolMatrix& m) {
  const int n = m.size;
  std::uint32_t a = 0, b = 0;
  auto bit = [&](int x, int y) { return m.dark(x, y) ? 1u : 0u; };
  for (int i = 0; i <= 5; ++i) a |= bit(8, i) << i;
  a |= bit(8, 7) << 6;
  a |= bit(8, 8) << 7;
  a |= bit(7, 8) << 8;
  for (int i = 9; i < 15; ++i) a |= bit(14 - i, 8) << i;
  for (int i = 0; i < 8; ++i) b |= bit(n - 1 - i, 8) << i;
  for (int i = 8; i < 15; ++i) b |= bit(8, n - 15 + i) << i;

  int best_d = 16;
  std::pair<EcLevel, int> best{EcLevel::kL, 0};
  for (int li = 0; li < 4; ++li)
    for (int mask = 0; mask < 8; ++mask) {
      const auto level = static_cast<EcLevel>(li);
      const std::uint32_t f = format_bits(level, mask);
      const int d = std::min(hamming(a, f), hamming(b, f));
      if (d < best_d) {
        best_d = d;
        best = {level, mask};
      }
    }
  if (best_d > 3) fail(ErrorCode::kFormatInfoCorrupt, "neither format-info copy is readable");
  return best;
}

Bytes decode_impl(const SymbolMatrix& m) {
  const int b = m.bits_per_module;
  check_bits(b);
  if ((m.size - 17) % 4 != 0) fail(ErrorCode::kInvalidField, "matrix size is not a QR size");
  const int version = (m.size - 17) / 4;
  check_version(version);
  if (m.modules.size() != static_cast<size_t>(m.size) * m.size)
    fail(ErrorCode::kInvalidField, "module count does not match size");

  const auto [level, mask] = read_format(m);
  const auto blocks = repeated_blocks(version, level, b);
  size_t total = 0;
  for (const auto& bs : blocks) total += static_cast<size_t>(bs.data_len + bs.ec_len);

  const auto cells = data_cells(skeleton(version));
  const std::uint8_t flip = static_cast<std::uint8_t>((1 << b) - 1);
  Bytes codewords(total, 0);
  for (size_t k = 0; k < cells.size(); ++k) {
    const auto [x, y] = cells[k];
    std::uint8_t v = m.at(x, y) & flip;
    if (mask_bit(mask, x, y)) v ^= flip;
    for (int i = 0; i < b; ++i) {
      const size_t bit = k * b + i;
      if (bit >= total * 8) break;
      if (v >> (b - 1 - i) & 1) codewords[bit / 8] |= static_cast<std::uint8_t>(1 << (7 - bit % 8));
    }
  }
  return parse_segment(deinterleave_and_correct(codewords, blocks), version, b);
}

double dist2(const imaging::Rgb& a, const imaging::Rgb& b) {
  return (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b);
}

double luma(const imaging::Rgb& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

bool is_white(const imaging::Rgb& c) { return std::min({c.r, c.g, c.b}) > 0.5; }

int raster_version(int width, int height) {
  const int size = width - 2 * kQuietZone;
  if (width != height || size < symbol_size(kMinVersion) || (size - 17) % 4 != 0)
    fail(ErrorCode::kInvalidField, "raster is not a quiet-zoned symbol");
  const int version = (size - 17) / 4;
  check_version(version);
  return version;
}

SymbolMatrix blank(int version, int b) {
  SymbolMatrix m;
  m.version = version;
  m.size = symbol_size(version);
  m.bits_per_module = b;
  m.modules.assign(static_cast<size_t>(m.size) * m.size, 0);
  return m;
}

void fill_format_fields(SymbolMatrix& m) {
  const auto [level, mask] = read_format(m);
  m.ec_level = level;
  m.mask = mask;
}

// Squared distance under which two reference colors count as the same.
constexpr double kAmbiguousDist2 = 0.09;

}  // namespace

bool SymbolMatrix::dark(int x, int y) const { return dark_value(at(x, y), bits_per_module); }

char ec_level_char(EcLevel level) { return "LMQH"[level_index(level)]; }

EcLevel parse_ec_level(std::string_view s) {
  if (s == "L" || s == "l") return EcLevel::kL;
  if (s == "M" || s == "m") return EcLevel::kM;
  if (s == "Q" || s == "q") return EcLevel::kQ;
  if (s == "H" || s == "h") return EcLevel::kH;
  fail(ErrorCode::kInvalidField, "unknown EC level '" + std::string(s) + "'");
}

int raw_data_modules(int version) {
  check_version(version);
  int result = (16 * version + 128) * version + 64;
  if (version >= 2) {
    const int align = version / 7 + 2;
    result -= (25 * align - 10) * align - 55;
    if (version >= 7) result -= 36;
  }
  return result;
}

std::vector<BlockSpec> block_structure(int version, EcLevel level) {
  check_version(version);
  const int li = level_index(level);
  const int blocks = kNumBlocks[li][version];
  const int ec = kEcPerBlock[li][version];
  const int raw = raw_data_modules(version) / 8;
  const int short_blocks = blocks - raw % blocks;
  const int short_len = raw / blocks;
  std::vector<BlockSpec> out;
  for (int i = 0; i < blocks; ++i) out.push_back({short_len - ec + (i < short_blocks ? 0 : 1), ec});
  return out;
}

int data_codewords(int version, EcLevel level) {
  int total = 0;
  for (const auto& bs : block_structure(version, level)) total += bs.data_len;
  return total;
}

int data_bits(int version, EcLevel level, int bits_per_module) {
  check_bits(bits_per_module);
  return bits_per_module * data_codewords(version, level) * 8;
}

int byte_capacity(int version, EcLevel level, int bits_per_module) {
  check_bits(bits_per_module);
  const int cb = count_bits(version, bits_per_module);
  const int bits = bits_per_module * data_codewords(version, level) * 8 - 4 - cb;
  return std::min(bits / 8, (1 << cb) - 1);
}

std::vector<int> placement_map(int version) {
  check_version(version);
  const Skeleton sk = skeleton(version);
  std::vector<int> map(sk.function.size(), -1);
  const auto cells = data_cells(sk);
  for (size_t k = 0; k < cells.size(); ++k)
    map[static_cast<size_t>(cells[k].second) * sk.size + cells[k].first] = static_cast<int>(k);
  return map;
}

PlacementAudit audit_placement(int version) {
  check_version(version);
  const Skeleton sk = skeleton(version);
  const auto cells = data_cells(sk);
  std::vector<int> hits(sk.function.size(), 0);
  for (const auto& [x, y] : cells) ++hits[static_cast<size_t>(y) * sk.size + x];
  PlacementAudit a;
  a.data_modules = static_cast<int>(cells.size());
  for (size_t i = 0; i < hits.size(); ++i) {
    if (sk.function[i]) {
      a.doubly_assigned += hits[i] > 0;
    } else {
      a.unassigned += hits[i] == 0;
      a.doubly_assigned += hits[i] > 1;
    }
  }
  return a;
}

std::uint16_t format_bits(EcLevel level, int mask) {
  const unsigned data = static_cast<unsigned>(level_format_bits(level) << 3 | mask);
  unsigned rem = data;
  for (int i = 0; i < 10; ++i) rem = (rem << 1) ^ ((rem >> 9) * 0x537);
  return static_cast<std::uint16_t>((data << 10 | (rem & 0x3FF)) ^ 0x5412);
}

std::uint32_t version_bits(int version) {
  std::uint32_t rem = static_cast<std::uint32_t>(version);
  for (int i = 0; i < 12; ++i) rem = (rem << 1) ^ ((rem >> 11) * 0x1F25);
  return static_cast<std::uint32_t>(version) << 12 | (rem & 0xFFF);
}

SymbolMatrix qr_encode(std::span<const std::uint8_t> payload, int version, EcLevel level, int mask) {
  return encode_impl(payload, 1, version, level, mask);
}

Bytes qr_decode(const SymbolMatrix& matrix) {
  if (matrix.bits_per_module != 1) fail(ErrorCode::kInvalidField, "not a binary QR matrix");
  return decode_impl(matrix);
}

SymbolMatrix hcc2d_encode(std::span<const std::uint8_t> payload, int bits_per_module, int version, EcLevel level,
                          int mask) {
  return encode_impl(payload, bits_per_module, version, level, mask);
}

Bytes hcc2d_decode(const SymbolMatrix& matrix) { return decode_impl(matrix); }

long mask_penalty(const SymbolMatrix& m) {
  const int n = m.size;
  long result = 0;
  auto d = [&](int x, int y) { return m.dark(x, y); };
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < n; ++i) {
      bool color = false;
      int run = 0, bits = 0;
      for (int j = 0; j < n; ++j) {
        const bool c = pass == 0 ? d(j, i) : d(i, j);
        if (j == 0 || c != color) {
          color = c;
          run = 1;
        } else if (++run == 5) {
          result += 3;
        } else if (run > 5) {
          ++result;
        }
        bits = ((bits << 1) & 0x7FF) | (c ? 1 : 0);
        if (j >= 10 && (bits == 0x05D || bits == 0x5D0)) result += 40;
      }
    }
  }
  for (int y = 0; y + 1 < n; ++y)
    for (int x = 0; x + 1 < n; ++x) {
      const bool c = d(x, y);
      if (c == d(x + 1, y) && c == d(x, y + 1) && c == d(x + 1, y + 1)) result += 3;
    }
  long dark = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) dark += d(x, y);
  const long total = static_cast<long>(n) * n;
  for (long k = 0; dark * 20 < (9 - k) * total || dark * 20 > (11 + k) * total; ++k) result += 10;
  return result;
}

imaging::RgbImage render(const SymbolMatrix& m) {
  const int w = m.size + 2 * kQuietZone;
  imaging::RgbImage img(w, w, {1, 1, 1});
  for (int y = 0; y < m.size; ++y)
    for (int x = 0; x < m.size; ++x) {
      const std::uint8_t v = m.at(x, y);
      imaging::Rgb c;
      if (m.bits_per_module == 1)
        c = v ? imaging::Rgb{0, 0, 0} : imaging::Rgb{1, 1, 1};
      else
        c = m.palette.at(v);
      img.at(x + kQuietZone, y + kQuietZone) = c;
    }
  if (m.bits_per_module > 1)
    for (size_t r = 0; r < m.palette.size(); ++r)
      img.at(kQuietZone + m.size, kQuietZone + static_cast<int>(r)) = m.palette[r];
  return img;
}

imaging::GrayImage render_gray(const SymbolMatrix& m) {
  if (m.bits_per_module != 1) fail(ErrorCode::kInvalidField, "gray rasters hold binary symbols only");
  return imaging::to_gray(render(m));
}

SymbolMatrix read_raster(const imaging::GrayImage& raster) {
  const int version = raster_version(raster.width(), raster.height());
  SymbolMatrix m = blank(version, 1);
  for (int y = 0; y < m.size; ++y)
    for (int x = 0; x < m.size; ++x) m.at(x, y) = raster.at(x + kQuietZone, y + kQuietZone) < 0.5 ? 1 : 0;
  fill_format_fields(m);
  return m;
}

SymbolMatrix read_raster(const imaging::RgbImage& raster) {
  const int version = raster_version(raster.width(), raster.height());
  const int size = symbol_size(version);
  auto strip = [&](int r) { return raster.at(kQuietZone + size, kQuietZone + r); };

  int b = 3;
  if (luma(strip(0)) >= 0.5)
    b = 1;
  else if (is_white(strip(4)))
    b = 2;
  SymbolMatrix m = blank(version, b);
  if (b == 1) {
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        m.at(x, y) = luma(raster.at(x + kQuietZone, y + kQuietZone)) < 0.5 ? 1 : 0;
    fill_format_fields(m);
    return m;
  }

  for (int r = 0; r < (1 << b); ++r) m.palette.push_back(strip(r));
  for (size_t i = 0; i < m.palette.size(); ++i)
    for (size_t j = i + 1; j < m.palette.size(); ++j)
      if (dist2(m.palette[i], m.palette[j]) < kAmbiguousDist2)
        fail(ErrorCode::kPaletteAmbiguous,
             "palette references " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const auto& c = raster.at(x + kQuietZone, y + kQuietZone);
      size_t best = 0;
      for (size_t i = 1; i < m.palette.size(); ++i)
        if (dist2(c, m.palette[i]) < dist2(c, m.palette[best])) best = i;
      m.at(x, y) = static_cast<std::uint8_t>(best);
    }
  fill_format_fields(m);
  return m;
}

Bytes decode_raster(const imaging::RgbImage& raster) { return decode_impl(read_raster(raster)); }
Bytes decode_raster(const imaging::GrayImage& raster) { return decode_impl(read_raster(raster)); }

std::string sidecar_line(const SymbolMatrix& m) {
  return std::to_string(m.version) + " " + ec_level_char(m.ec_level) + " " + std::to_string(m.mask) + " " +
         std::to_string(m.bits_per_module);
}

void write_symbol(const std::filesystem::path& path, const SymbolMatrix& matrix) {
  if (matrix.bits_per_module == 1)
    imaging::write_pgm(path, render_gray(matrix), sidecar_line(matrix));
  else
    imaging::write_ppm(path, render(matrix), sidecar_line(matrix));
}

Bytes read_symbol_file(const std::filesystem::path& path) {
  const Bytes bytes = io::read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_raster(imaging::decode_pgm(bytes));
  return decode_raster(imaging::decode_ppm(bytes));
}

}  // namespace pseal::codec
