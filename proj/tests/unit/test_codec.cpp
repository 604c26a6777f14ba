#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "pseal/codec.hpp"
#include "pseal/error.hpp"
#include "pseal/io.hpp"
#include "pseal/rs.hpp"

using namespace pseal;
using namespace pseal::codec;

namespace {

Bytes random_bytes(std::mt19937_64& rng, size_t n) {
  Bytes b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(rng());
  return b;
}

// Carry-less multiply followed by reduction modulo 0x11D.
std::uint8_t clmul_reduce(std::uint8_t a, std::uint8_t b) {
  unsigned p = 0;
  for (int i = 0; i < 8; ++i)
    if (b >> i & 1) p ^= static_cast<unsigned>(a) << i;
  for (int bit = 15; bit >= 8; --bit)
    if (p >> bit & 1) p ^= 0x11Du << (bit - 8);
  return static_cast<std::uint8_t>(p);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;  // sentinel: nothing thrown
}

struct ReferenceSymbol {
  Bytes payload;
  int version;
  EcLevel level;
  int mask;
  std::vector<std::string> rows;
};

std::vector<ReferenceSymbol> load_reference() {
  std::ifstream in(std::filesystem::path(PSEAL_TEST_DATA_DIR) / "qr_reference.txt");
  REQUIRE(in.good());
  std::vector<ReferenceSymbol> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("case ", 0) == 0) {
      std::istringstream ss(line.substr(5));
      std::string hex, level;
      ReferenceSymbol r;
      ss >> hex >> r.version >> level >> r.mask;
      r.payload = hex == "-" ? Bytes{} : io::from_hex(hex);
      r.level = parse_ec_level(level);
      out.push_back(r);
    } else if (!line.empty()) {
      out.back().rows.push_back(line);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("GF(256) multiply agrees with carry-less multiply and reduction") {
  CHECK(rs::gf_mul(0x02, 0x80) == 0x1D);
  int mismatches = 0;
  for (int a = 0; a < 256; ++a)
    for (int b = 0; b < 256; ++b)
      mismatches += rs::gf_mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) !=
                    clmul_reduce(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b));
  CHECK(mismatches == 0);
  for (int a = 1; a < 256; ++a) CHECK(rs::gf_mul(static_cast<std::uint8_t>(a), rs::gf_inv(static_cast<std::uint8_t>(a))) == 1);
  CHECK_THROWS_AS(rs::gf_inv(0), Error);
}

TEST_CASE("RS parity matches the standard HELLO WORLD 1-M block") {
  const Bytes data{32, 91, 11, 120, 209, 114, 220, 77, 67, 64, 236, 17, 236, 17, 236, 17};
  CHECK(rs::encode(data, 10) == Bytes{196, 35, 39, 119, 235, 215, 231, 226, 93, 23});
}

TEST_CASE("RS decode is the identity on clean words") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Bytes data = random_bytes(rng, 1 + rng() % 100);
    const int n_ec = 2 + static_cast<int>(rng() % 30);
    Bytes word = data;
    const Bytes ec = rs::encode(data, n_ec);
    word.insert(word.end(), ec.begin(), ec.end());
    const auto r = rs::decode(word, n_ec);
    CHECK(r.data == data);
    CHECK(r.corrected == 0);
  }
}

TEST_CASE("RS corrects every pattern of up to floor(n_ec/2) errors") {
  std::mt19937_64 rng(2);
  int recovered = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const int n_ec = 2 + static_cast<int>(rng() % 29);
    const Bytes data = random_bytes(rng, 1 + rng() % (200 - n_ec));
    Bytes word = data;
    const Bytes ec = rs::encode(data, n_ec);
    word.insert(word.end(), ec.begin(), ec.end());
    std::set<size_t> pos;
    while (static_cast<int>(pos.size()) < n_ec / 2) pos.insert(rng() % word.size());
    for (size_t p : pos) word[p] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    const auto r = rs::decode(word, n_ec);
    recovered += r.data == data && r.corrected == n_ec / 2;
  }
  CHECK(recovered == trials);
}

TEST_CASE("RS reports failure one error past capacity") {
  std::mt19937_64 rng(3);
  int reported = 0, silent = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const int n_ec = 16 + 2 * static_cast<int>(rng() % 8);
    const Bytes data = random_bytes(rng, 10 + rng() % 100);
    Bytes word = data;
    const Bytes ec = rs::encode(data, n_ec);
    word.insert(word.end(), ec.begin(), ec.end());
    std::set<size_t> pos;
    while (static_cast<int>(pos.size()) < n_ec / 2 + 1) pos.insert(rng() % word.size());
    for (size_t p : pos) word[p] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    try {
      rs::decode(word, n_ec);
      ++silent;
    } catch (const Error& e) {
      reported += e.code() == ErrorCode::kUncorrectable;
    }
  }
  CHECK(reported >= trials * 99 / 100);
  MESSAGE("silent miscorrections: " << silent);
}

TEST_CASE("QR matrices match an independent encoder module for module") {
  for (const auto& ref : load_reference()) {
    CAPTURE(ref.version);
    CAPTURE(ref.mask);
    const auto m = qr_encode(ref.payload, ref.version, ref.level, ref.mask);
    REQUIRE(m.size == static_cast<int>(ref.rows.size()));
    int diff = 0;
    for (int y = 0; y < m.size; ++y)
      for (int x = 0; x < m.size; ++x) diff += m.at(x, y) != (ref.rows[y][x] == '1' ? 1 : 0);
    CHECK(diff == 0);
    CHECK(qr_decode(m) == ref.payload);
  }
}

TEST_CASE("QR round trips HELLO and the empty payload") {
  const Bytes hello{'H', 'E', 'L', 'L', 'O'};
  const auto m = qr_encode(hello, 1, EcLevel::kM);
  CHECK(m.size == 21);
  CHECK(qr_decode(m) == hello);
  const auto e = qr_encode({}, 0, EcLevel::kH);
  CHECK(e.version == 1);
  CHECK(qr_decode(e).empty());
}

TEST_CASE("QR round trips random payloads across versions and levels") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 400; ++t) {
    const int version = 1 + t % 10;
    const auto level = static_cast<EcLevel>((t / 10) % 4);
    const Bytes p = random_bytes(rng, rng() % (byte_capacity(version, level) + 1));
    const auto m = qr_encode(p, version, level);
    REQUIRE(qr_decode(m) == p);
  }
}

TEST_CASE("mask choice is the lowest penalty with ties to the lowest id") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Bytes p = random_bytes(rng, 1 + rng() % 40);
    const auto chosen = qr_encode(p, 3, EcLevel::kM);
    long best = -1;
    int best_mask = -1;
    for (int mask = 0; mask < 8; ++mask) {
      const long pen = mask_penalty(qr_encode(p, 3, EcLevel::kM, mask));
      if (best_mask < 0 || pen < best) {
        best = pen;
        best_mask = mask;
      }
    }
    CHECK(chosen.mask == best_mask);
    CHECK(qr_encode(p, 3, EcLevel::kM) == chosen);
  }
}

TEST_CASE("payloads beyond version 10 are too large") {
  const Bytes big(1264, 'x');
  CHECK(code_of([&] { qr_encode(big, 0, EcLevel::kL); }) == ErrorCode::kPayloadTooLarge);
  CHECK(code_of([&] { qr_encode(Bytes(byte_capacity(10, EcLevel::kL) + 1, 1), 10, EcLevel::kL); }) ==
        ErrorCode::kPayloadTooLarge);
  CHECK_NOTHROW(qr_encode(Bytes(byte_capacity(10, EcLevel::kL), 1), 10, EcLevel::kL));
  CHECK(byte_capacity(10, EcLevel::kL) == 271);
  CHECK(byte_capacity(1, EcLevel::kM) == 14);
}

TEST_CASE("placement map covers every non-function cell exactly once") {
  for (int v = 1; v <= 10; ++v) {
    const auto a = audit_placement(v);
    CHECK(a.unassigned == 0);
    CHECK(a.doubly_assigned == 0);
    CHECK(a.data_modules == raw_data_modules(v));
    int total = 0;
    for (const auto& bs : block_structure(v, EcLevel::kQ)) total += bs.data_len + bs.ec_len;
    CHECK(total == raw_data_modules(v) / 8);
  }
}

TEST_CASE("flipping modules within the EC budget still decodes") {
  std::mt19937_64 rng(6);
  for (int v = 1; v <= 10; ++v)
    for (int li = 0; li < 4; ++li) {
      const auto level = static_cast<EcLevel>(li);
      const Bytes p = random_bytes(rng, byte_capacity(v, level) / 2);
      auto m = qr_encode(p, v, level);
      const auto map = placement_map(v);
      // One flipped module damages at most one codeword; the per-block budget
      // bounds how many codewords any block can lose.
      const int budget = block_structure(v, level).front().ec_len / 2;
      std::vector<int> cells;
      for (size_t i = 0; i < map.size(); ++i)
        if (map[i] >= 0 && map[i] < raw_data_modules(v) / 8 * 8) cells.push_back(static_cast<int>(i));
      std::shuffle(cells.begin(), cells.end(), rng);
      for (int k = 0; k < budget; ++k) m.modules[cells[k]] ^= 1;
      CHECK(qr_decode(m) == p);
    }
}

TEST_CASE("corrupting both format copies is reported") {
  auto m = qr_encode(Bytes{'f', 'm', 't'}, 2, EcLevel::kQ);
  const int n = m.size;
  for (int i = 0; i <= 5; ++i) m.at(8, i) ^= 1;
  m.at(8, 7) ^= 1;
  for (int i = 0; i < 8; ++i) m.at(n - 1 - i, 8) ^= 1;
  CHECK(code_of([&] { qr_decode(m); }) == ErrorCode::kFormatInfoCorrupt);
}

TEST_CASE("one damaged format copy is tolerated") {
  auto m = qr_encode(Bytes{'o', 'k'}, 1, EcLevel::kL);
  for (int i = 0; i <= 5; ++i) m.at(8, i) ^= 1;
  CHECK(qr_decode(m) == Bytes{'o', 'k'});
}

TEST_CASE("format and version words") {
  // Level M, mask 0 and version 7 from the standard's tables.
  CHECK(format_bits(EcLevel::kM, 0) == 0x5412);
  CHECK(format_bits(EcLevel::kL, 0) == 0x77C4);
  CHECK(version_bits(7) == 0x07C94);
}

TEST_CASE("HCC2D with one bit per module is plain QR") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 40; ++t) {
    const int v = 1 + t % 10;
    const auto level = static_cast<EcLevel>(t % 4);
    const Bytes p = random_bytes(rng, rng() % (byte_capacity(v, level) + 1));
    CHECK(hcc2d_encode(p, 1, v, level) == qr_encode(p, v, level));
  }
}

TEST_CASE("HCC2D capacity scales with bits per module") {
  const auto map = placement_map(5);
  int modules = 0;
  for (int c : map) modules += c >= 0;
  CHECK(modules == raw_data_modules(5));
  for (int b = 2; b <= 3; ++b)
    for (int li = 0; li < 4; ++li) {
      const auto level = static_cast<EcLevel>(li);
      CHECK(data_bits(5, level, b) == b * data_bits(5, level, 1));
      // Every codeword bit of the colored stream has a module to live in.
      int codewords = 0;
      for (const auto& bs : block_structure(5, level)) codewords += bs.data_len + bs.ec_len;
      CHECK(b * codewords * 8 <= modules * b);
      const Bytes full(byte_capacity(5, level, b), 0x5A);
      const auto m = hcc2d_encode(full, b, 5, level);
      CHECK(hcc2d_decode(m) == full);
      CHECK(code_of([&] { hcc2d_encode(Bytes(full.size() + 1, 1), b, 5, level); }) == ErrorCode::kPayloadTooLarge);
    }
  // 4 mode bits and a 16-bit count precede the payload.
  CHECK(byte_capacity(5, EcLevel::kL, 3) == (data_bits(5, EcLevel::kL, 3) - 20) / 8);
}

TEST_CASE("HCC2D keeps function patterns black and white") {
  const auto m = hcc2d_encode(Bytes(30, 7), 3, 4, EcLevel::kM);
  const auto map = placement_map(4);
  for (size_t i = 0; i < map.size(); ++i)
    if (map[i] < 0) CHECK(m.modules[i] <= 1);
  CHECK(m.palette.size() == 8);
}

TEST_CASE("HCC2D b=2 survives per-channel noise of 0.1") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  int ok = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const int v = 1 + static_cast<int>(rng() % 10);
    const auto level = static_cast<EcLevel>(rng() % 4);
    const Bytes p = random_bytes(rng, rng() % (byte_capacity(v, level, 2) + 1));
    auto img = render(hcc2d_encode(p, 2, v, level));
    for (auto& px : img.data()) {
      px.r = std::clamp(px.r + noise(rng), 0.0, 1.0);
      px.g = std::clamp(px.g + noise(rng), 0.0, 1.0);
      px.b = std::clamp(px.b + noise(rng), 0.0, 1.0);
    }
    ok += decode_raster(img) == p;
  }
  CHECK(ok == trials);
}

TEST_CASE("HCC2D b=3 rasters round trip") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 30; ++t) {
    const int v = 1 + t % 10;
    const Bytes p = random_bytes(rng, rng() % (byte_capacity(v, EcLevel::kL, 3) + 1));
    const auto m = hcc2d_encode(p, 3, v, EcLevel::kL);
    const auto back = read_raster(render(m));
    CHECK(back.bits_per_module == 3);
    CHECK(back.mask == m.mask);
    CHECK(hcc2d_decode(back) == p);
  }
}

TEST_CASE("coinciding palette references are ambiguous") {
  auto img = render(hcc2d_encode(Bytes{1, 2, 3}, 2, 2, EcLevel::kM));
  const int strip_x = kQuietZone + symbol_size(2);
  img.at(strip_x, kQuietZone + 3) = img.at(strip_x, kQuietZone + 2);
  CHECK(code_of([&] { decode_raster(img); }) == ErrorCode::kPaletteAmbiguous);
}

TEST_CASE("symbol files carry the sidecar line and decode back") {
  const auto dir = std::filesystem::temp_directory_path() / "pseal_codec_test";
  std::filesystem::create_directories(dir);
  const Bytes p{'s', 'i', 'd', 'e'};
  const auto qr = qr_encode(p, 2, EcLevel::kH);
  write_symbol(dir / "qr.pgm", qr);
  const Bytes pgm = io::read_file(dir / "qr.pgm");
  CHECK(imaging::pnm_comment(pgm) == sidecar_line(qr));
  CHECK(read_symbol_file(dir / "qr.pgm") == p);
  CHECK(decode_raster(imaging::decode_pgm(pgm)) == p);

  const auto color = hcc2d_encode(p, 3, 2, EcLevel::kH);
  write_symbol(dir / "hcc.ppm", color);
  CHECK(imaging::pnm_comment(io::read_file(dir / "hcc.ppm")) == sidecar_line(color));
  CHECK(read_symbol_file(dir / "hcc.ppm") == p);
  CHECK(sidecar_line(color).substr(0, 4) == "2 H ");
  std::filesystem::remove_all(dir);
}
