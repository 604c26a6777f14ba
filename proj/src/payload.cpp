#include "pseal/payload.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "pseal/error.hpp"

namespace pseal::payload {

namespace {

constexpr std::uint8_t kVersion = 1;

int mrz_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'Z') return c - 'A' + 10;
  if (c == '<') return 0;
  return -1;
}

void check_mrz(std::string_view field, std::string_view name, size_t min_len, size_t max_len) {
  if (field.size() < min_len || field.size() > max_len)
    fail(ErrorCode::kInvalidField, std::string(name) + " must have " + std::to_string(min_len) + ".." +
                                       std::to_string(max_len) + " characters");
  for (char c : field)
    if (mrz_value(c) < 0)
      fail(ErrorCode::kInvalidMrzCharacter, std::string(name) + " contains '" + std::string(1, c) + "'");
}

void check_date(std::string_view s, std::string_view name) {
  auto bad = [&] { fail(ErrorCode::kInvalidField, std::string(name) + " is not a valid YYMMDD date"); };
  if (s.size() != 6 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) bad();
  const int yy = (s[0] - '0') * 10 + (s[1] - '0');
  const int mm = (s[2] - '0') * 10 + (s[3] - '0');
  const int dd = (s[4] - '0') * 10 + (s[5] - '0');
  static constexpr int kDays[12]{31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (mm < 1 || mm > 12 || dd < 1 || dd > kDays[mm - 1]) bad();
  if (mm == 2 && dd == 29 && yy % 4 != 0) bad();
}

std::string padded(std::string_view s, size_t width) {
  std::string out(s);
  out.resize(std::max(width, out.size()), '<');
  return out;
}

void put_string(Bytes& out, std::string_view s) {
  if (s.size() > 0xFFFF) fail(ErrorCode::kInvalidField, "field longer than 65535 bytes");
  io::put_u16(out, static_cast<std::uint16_t>(s.size()));
  io::put_bytes(out, {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

std::string get_string(io::Reader& r) {
  const auto n = r.u16();
  const auto b = r.take(n);
  return {b.begin(), b.end()};
}

void expect_magic(std::span<const std::uint8_t> bytes, const char* magic) {
  if (bytes.size() < 4) fail(ErrorCode::kTruncatedInput, "input shorter than its magic");
  if (std::memcmp(bytes.data(), magic, 4) != 0) fail(ErrorCode::kBadMagic, std::string("expected ") + magic);
}

std::uint16_t fixed_u16(double v, double scale, const char* what) {
  const double q = std::round(v * scale);
  if (!(q >= 0 && q <= 65535)) fail(ErrorCode::kInvalidField, std::string(what) + " outside the wire range");
  return static_cast<std::uint16_t>(q);
}

std::uint32_t fixed_u32(double v, double scale, const char* what) {
  const double q = std::round(v * scale);
  if (!(q >= 0 && q <= 4294967295.0)) fail(ErrorCode::kInvalidField, std::string(what) + " outside the wire range");
  return static_cast<std::uint32_t>(q);
}

std::uint16_t box_u16(int v) {
  if (v < 0 || v > 0xFFFF) fail(ErrorCode::kInvalidField, "mark box outside the wire range");
  return static_cast<std::uint16_t>(v);
}

geometry::Point mark_center(const imaging::Box& b, const geometry::Frame& f) {
  return {(b.x + b.w / 2.0) / f.width, (b.y + b.h / 2.0) / f.height};
}

void end_section(io::Reader& r, size_t start, std::uint32_t len, const char* name) {
  if (r.position() - start != len) fail(ErrorCode::kInvalidField, std::string(name) + " section length mismatch");
}

Bytes as_bytes(std::string_view s) { return {s.begin(), s.end()}; }

}  // namespace

int mrz_check_digit(std::string_view field) {
  if (field.empty()) fail(ErrorCode::kInvalidMrzCharacter, "empty MRZ field");
  static constexpr int kWeights[3]{7, 3, 1};
  int sum = 0;
  for (size_t i = 0; i < field.size(); ++i) {
    const int v = mrz_value(field[i]);
    if (v < 0) fail(ErrorCode::kInvalidMrzCharacter, "'" + std::string(1, field[i]) + "' is not an MRZ character");
    sum += v * kWeights[i % 3];
  }
  return sum % 10;
}

void validate(const Demographic& d) {
  check_mrz(d.document_type, "document_type", 1, 2);
  check_mrz(d.issuing_state, "issuing_state", 3, 3);
  if (d.holder_name.empty()) fail(ErrorCode::kInvalidField, "holder_name is empty");
  check_mrz(d.document_number, "document_number", 1, 9);
  check_mrz(d.nationality, "nationality", 3, 3);
  check_date(d.date_of_birth, "date_of_birth");
  if (d.sex != 'M' && d.sex != 'F' && d.sex != 'X') fail(ErrorCode::kInvalidField, "sex must be M, F or X");
  check_date(d.date_of_expiry, "date_of_expiry");
  check_mrz(d.optional_data, "optional_data", 0, 14);
}

int composite_check_digit(const Demographic& d) {
  const std::string doc = padded(d.document_number, 9);
  const std::string opt = padded(d.optional_data, 14);
  std::string s = doc + char('0' + mrz_check_digit(doc));
  s += d.date_of_birth + char('0' + mrz_check_digit(d.date_of_birth));
  s += d.date_of_expiry + char('0' + mrz_check_digit(d.date_of_expiry));
  s += opt + char('0' + mrz_check_digit(opt));
  return mrz_check_digit(s);
}

Bytes serialize_demographic(const Demographic& d) {
  validate(d);
  Bytes out = as_bytes("BPD1");
  io::put_u8(out, kVersion);
  for (const std::string* f : {&d.document_type, &d.issuing_state, &d.holder_name, &d.document_number,
                               &d.nationality, &d.date_of_birth})
    put_string(out, *f);
  put_string(out, std::string(1, d.sex));
  put_string(out, d.date_of_expiry);
  put_string(out, d.optional_data);
  io::put_u8(out, static_cast<std::uint8_t>(mrz_check_digit(padded(d.document_number, 9))));
  io::put_u8(out, static_cast<std::uint8_t>(mrz_check_digit(d.date_of_birth)));
  io::put_u8(out, static_cast<std::uint8_t>(mrz_check_digit(d.date_of_expiry)));
  io::put_u8(out, static_cast<std::uint8_t>(composite_check_digit(d)));
  return out;
}

Demographic deserialize_demographic(std::span<const std::uint8_t> bytes) {
  expect_magic(bytes, "BPD1");
  io::Reader r(bytes.subspan(4));
  if (r.u8() != kVersion) fail(ErrorCode::kInvalidField, "unsupported demographic version");
  Demographic d;
  d.document_type = get_string(r);
  d.issuing_state = get_string(r);
  d.holder_name = get_string(r);
  d.document_number = get_string(r);
  d.nationality = get_string(r);
  d.date_of_birth = get_string(r);
  const std::string sex = get_string(r);
  if (sex.size() != 1) fail(ErrorCode::kInvalidField, "sex must be one character");
  d.sex = sex[0];
  d.date_of_expiry = get_string(r);
  d.optional_data = get_string(r);
  const int doc = r.u8(), dob = r.u8(), exp = r.u8(), comp = r.u8();
  if (r.remaining() != 0) fail(ErrorCode::kInvalidField, "trailing bytes after demographic record");
  validate(d);
  if (doc != mrz_check_digit(padded(d.document_number, 9)) || dob != mrz_check_digit(d.date_of_birth) ||
      exp != mrz_check_digit(d.date_of_expiry) || comp != composite_check_digit(d))
    fail(ErrorCode::kChecksumMismatch, "MRZ check digit mismatch");
  return d;
}

Demographic parse_demographic(std::string_view text) {
  Demographic d;
  std::istringstream in{std::string(text)};
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kInvalidField, "demographic line without '=': " + line);
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "document_type") d.document_type = value;
    else if (key == "issuing_state") d.issuing_state = value;
    else if (key == "holder_name") d.holder_name = value;
    else if (key == "document_number") d.document_number = value;
    else if (key == "nationality") d.nationality = value;
    else if (key == "date_of_birth") d.date_of_birth = value;
    else if (key == "sex") d.sex = value.size() == 1 ? value[0] : '?';
    else if (key == "date_of_expiry") d.date_of_expiry = value;
    else if (key == "optional_data") d.optional_data = value;
    else fail(ErrorCode::kInvalidField, "unknown demographic field '" + key + "'");
  }
  validate(d);
  return d;
}

std::string format_demographic(const Demographic& d) {
  std::ostringstream os;
  os << "document_type = " << d.document_type << "\nissuing_state = " << d.issuing_state
     << "\nholder_name = " << d.holder_name << "\ndocument_number = " << d.document_number
     << "\nnationality = " << d.nationality << "\ndate_of_birth = " << d.date_of_birth << "\nsex = " << d.sex
     << "\ndate_of_expiry = " << d.date_of_expiry << "\noptional_data = " << d.optional_data << '\n';
  return os.str();
}

// -- template ---------------------------------------------------------------------

BiometricTemplate quantize(const BiometricTemplate& t) {
  BiometricTemplate q = t;
  for (auto& p : q.landmarks) {
    p.x = fixed_u16(p.x, kLandmarkScale, "landmark") / kLandmarkScale;
    p.y = fixed_u16(p.y, kLandmarkScale, "landmark") / kLandmarkScale;
  }
  for (auto& m : q.marks.marks) {
    for (auto& v : m.intensity_hist) v = fixed_u16(v, kHistScale, "histogram bin") / kHistScale;
    for (auto& v : m.orient_hist) v = fixed_u16(v, kHistScale, "histogram bin") / kHistScale;
    m.center = mark_center(m.bbox, q.marks.frame);
  }
  q.marks = marks::make_mark_set(std::move(q.marks.marks), q.marks.frame);
  if (q.hand)
    for (auto& v : *q.hand) v = fixed_u32(v, kHandScale, "hand feature") / kHandScale;
  return q;
}

namespace {

// Bijections between a 16-bit two's-complement delta and small unsigned codes.
std::uint16_t zigzag(std::uint16_t d) {
  const auto v = static_cast<std::int16_t>(d);
  return static_cast<std::uint16_t>((static_cast<std::uint16_t>(v) << 1) ^ static_cast<std::uint16_t>(v >> 15));
}

std::uint16_t unzigzag(std::uint16_t z) {
  return static_cast<std::uint16_t>((z >> 1) ^ static_cast<std::uint16_t>(-(z & 1)));
}

}  // namespace

Bytes serialize_template(const BiometricTemplate& t) {
  Bytes out = as_bytes("BPT1");
  io::put_u8(out, kVersion);
  io::put_u64(out, t.created_at);

  Bytes lm;
  io::put_u8(lm, static_cast<std::uint8_t>(t.schema));
  if (t.landmarks.size() > 0xFFFF) fail(ErrorCode::kInvalidField, "too many landmarks");
  io::put_u16(lm, static_cast<std::uint16_t>(t.landmarks.size()));
  // Coordinates are stored as zigzagged mod-2^16 deltas from the previous
  // point; neighbouring landmarks are close, so the high bytes deflate well.
  std::uint16_t px = 0, py = 0;
  for (const auto& p : t.landmarks) {
    const auto x = fixed_u16(p.x, kLandmarkScale, "landmark"), y = fixed_u16(p.y, kLandmarkScale, "landmark");
    io::put_u16(lm, zigzag(static_cast<std::uint16_t>(x - px)));
    io::put_u16(lm, zigzag(static_cast<std::uint16_t>(y - py)));
    px = x;
    py = y;
  }

  Bytes mk;
  io::put_u16(mk, box_u16(t.marks.frame.width));
  io::put_u16(mk, box_u16(t.marks.frame.height));
  if (t.marks.marks.size() > 0xFFFF) fail(ErrorCode::kInvalidField, "too many marks");
  io::put_u16(mk, static_cast<std::uint16_t>(t.marks.marks.size()));
  for (const auto& m : t.marks.marks) {
    for (int v : {m.bbox.x, m.bbox.y, m.bbox.w, m.bbox.h}) io::put_u16(mk, box_u16(v));
    io::put_u8(mk, static_cast<std::uint8_t>(m.category));
    if (m.area < 0) fail(ErrorCode::kInvalidField, "negative mark area");
    io::put_u32(mk, static_cast<std::uint32_t>(m.area));
    for (double v : m.intensity_hist) io::put_u16(mk, fixed_u16(v, kHistScale, "histogram bin"));
    for (double v : m.orient_hist) io::put_u16(mk, fixed_u16(v, kHistScale, "histogram bin"));
  }

  Bytes hd;
  io::put_u8(hd, t.hand ? 1 : 0);
  if (t.hand)
    for (double v : *t.hand) io::put_u32(hd, fixed_u32(v, kHandScale, "hand feature"));

  for (const Bytes* s : {&lm, &mk, &hd}) {
    io::put_u32(out, static_cast<std::uint32_t>(s->size()));
    io::put_bytes(out, *s);
  }
  const auto digest = crypto::sha256(out);
  io::put_bytes(out, digest);
  return out;
}

BiometricTemplate deserialize_template(std::span<const std::uint8_t> bytes) {
  expect_magic(bytes, "BPT1");
  if (bytes.size() < 4 + 1 + 8 + 32) fail(ErrorCode::kTruncatedInput, "template shorter than its fixed fields");
  const auto body = bytes.first(bytes.size() - 32);
  const auto digest = crypto::sha256(body);
  if (!std::equal(digest.begin(), digest.end(), bytes.end() - 32))
    fail(ErrorCode::kChecksumMismatch, "template digest mismatch");

  io::Reader r(body.subspan(4));
  if (r.u8() != kVersion) fail(ErrorCode::kInvalidField, "unsupported template version");
  BiometricTemplate t;
  t.created_at = r.u64();

  std::uint32_t len = r.u32();
  size_t start = r.position();
  const auto schema = r.u8();
  if (schema > static_cast<std::uint8_t>(geometry::Schema::kHand16)) fail(ErrorCode::kInvalidField, "bad schema tag");
  t.schema = static_cast<geometry::Schema>(schema);
  const int n_lm = r.u16();
  std::uint16_t px = 0, py = 0;
  for (int i = 0; i < n_lm; ++i) {
    px = static_cast<std::uint16_t>(px + unzigzag(r.u16()));
    py = static_cast<std::uint16_t>(py + unzigzag(r.u16()));
    t.landmarks.push_back({px / kLandmarkScale, py / kLandmarkScale});
  }
  end_section(r, start, len, "landmark");

  len = r.u32();
  start = r.position();
  geometry::Frame frame;
  frame.width = r.u16();
  frame.height = r.u16();
  if (frame.width == 0 || frame.height == 0) fail(ErrorCode::kInvalidField, "empty mark frame");
  const int n_marks = r.u16();
  std::vector<marks::FacialMark> list;
  for (int i = 0; i < n_marks; ++i) {
    marks::FacialMark m;
    m.bbox.x = r.u16();
    m.bbox.y = r.u16();
    m.bbox.w = r.u16();
    m.bbox.h = r.u16();
    const auto cat = r.u8();
    if (cat > static_cast<std::uint8_t>(marks::Category::kOther)) fail(ErrorCode::kInvalidField, "bad mark category");
    m.category = static_cast<marks::Category>(cat);
    m.area = static_cast<int>(r.u32());
    for (double& v : m.intensity_hist) v = r.u16() / kHistScale;
    for (double& v : m.orient_hist) v = r.u16() / kHistScale;
    m.center = mark_center(m.bbox, frame);
    list.push_back(m);
  }
  t.marks = marks::make_mark_set(std::move(list), frame);
  end_section(r, start, len, "mark");

  len = r.u32();
  start = r.position();
  const auto has_hand = r.u8();
  if (has_hand > 1) fail(ErrorCode::kInvalidField, "bad hand flag");
  if (has_hand) {
    handgeom::HandFeatureVector f{};
    for (double& v : f) v = r.u32() / kHandScale;
    t.hand = f;
  }
  end_section(r, start, len, "hand");
  if (r.remaining() != 0) fail(ErrorCode::kInvalidField, "trailing bytes after template sections");
  return t;
}

// -- compression ----------------------------------------------------------------------

Bytes deflate(std::span<const std::uint8_t> data) {
  uLongf n = compressBound(static_cast<uLong>(data.size()));
  Bytes out(n);
  if (compress2(out.data(), &n, data.data(), static_cast<uLong>(data.size()), Z_BEST_COMPRESSION) != Z_OK)
    fail(ErrorCode::kIo, "deflate failed");
  out.resize(n);
  return out;
}

Bytes inflate(std::span<const std::uint8_t> data) {
  constexpr size_t kMaxOutput = 1 << 24;
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) fail(ErrorCode::kIo, "inflateInit failed");
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  Bytes out;
  std::uint8_t buf[4096];
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = buf;
    zs.avail_out = sizeof buf;
    rc = ::inflate(&zs, Z_NO_FLUSH);
    out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
    if (out.size() > kMaxOutput) rc = Z_MEM_ERROR;
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) rc = Z_BUF_ERROR;
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.avail_in != 0) fail(ErrorCode::kIntegrityFailure, "corrupt compressed template");
  return out;
}

// -- sealing -------------------------------------------------------------------------

Bytes seal_demographic(const Demographic& d, const BarcodeKeys& keys, const BarcodeIvs& ivs) {
  const auto plain = serialize_demographic(d);
  return crypto::serialize_ciphertext(crypto::hybrid_encrypt(plain, as_bytes(keys.demographic_key), ivs.demographic));
}

Demographic open_demographic(std::span<const std::uint8_t> sealed, const BarcodeKeys& keys) {
  const auto c = crypto::deserialize_ciphertext(sealed);
  return deserialize_demographic(crypto::hybrid_decrypt(c, as_bytes(keys.demographic_key)));
}

Bytes seal_template(const BiometricTemplate& t, BiometricCipher cipher, const BarcodeKeys& keys,
                    const BarcodeIvs& ivs) {
  const auto packed = deflate(serialize_template(t));
  if (cipher == BiometricCipher::kHybrid)
    return crypto::serialize_ciphertext(crypto::hybrid_encrypt(packed, as_bytes(keys.biometric_key), ivs.biometric));
  Bytes out = as_bytes("BPS1");
  io::put_u8(out, kVersion);
  io::put_bytes(out, crypto::sf_encrypt_bytes(packed, keys.biometric_sf_key, ivs.biometric_sf));
  return out;
}

BiometricTemplate open_template(std::span<const std::uint8_t> sealed, const BarcodeKeys& keys) {
  if (sealed.size() < 4) fail(ErrorCode::kTruncatedInput, "sealed template too short");
  Bytes packed;
  if (std::memcmp(sealed.data(), "BPC1", 4) == 0) {
    packed = crypto::hybrid_decrypt(crypto::deserialize_ciphertext(sealed), as_bytes(keys.biometric_key));
  } else {
    expect_magic(sealed, "BPS1");
    if (sealed.size() < 5) fail(ErrorCode::kTruncatedInput, "sealed template too short");
    if (sealed[4] != kVersion) fail(ErrorCode::kInvalidField, "unsupported envelope version");
    packed = crypto::sf_decrypt_bytes(sealed.subspan(5), keys.biometric_sf_key);
  }
  // A wrong SF key that happens to leave valid padding fails here instead.
  const auto plain = inflate(packed);
  try {
    return deserialize_template(plain);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBadMagic || e.code() == ErrorCode::kChecksumMismatch)
      fail(ErrorCode::kIntegrityFailure, e.what());
    throw;
  }
}

std::optional<int> suggest_bits_per_module(size_t bytes, codec::EcLevel level) {
  for (int b = 1; b <= 3; ++b)
    if (bytes <= static_cast<size_t>(codec::byte_capacity(codec::kMaxVersion, level, b))) return b;
  return std::nullopt;
}

PassportBarcodes build_passport_barcodes(const Demographic& d, const BiometricTemplate& t, const BarcodeKeys& keys,
                                         const BarcodeIvs& ivs, const CodecConfig& cfg) {
  if (cfg.bits_per_module < 1 || cfg.bits_per_module > 3)
    fail(ErrorCode::kBadConfig, "bits per module must be 1, 2 or 3");
  PassportBarcodes out;
  const auto demo = seal_demographic(d, keys, ivs);
  out.demographic = codec::qr_encode(demo, cfg.demographic_version, cfg.demographic_level);

  const auto bio = seal_template(t, cfg.cipher, keys, ivs);
  const int cap = codec::byte_capacity(cfg.biometric_version ? cfg.biometric_version : codec::kMaxVersion,
                                       cfg.biometric_level, cfg.bits_per_module);
  if (bio.size() > static_cast<size_t>(cap)) {
    const auto b = suggest_bits_per_module(bio.size(), cfg.biometric_level);
    fail(ErrorCode::kPayloadTooLarge,
         "sealed template is " + std::to_string(bio.size()) + " bytes, capacity " + std::to_string(cap) +
             (b ? "; suggested bits per module: " + std::to_string(*b) : "; no bits-per-module setting fits"));
  }
  out.biometric = codec::hcc2d_encode(bio, cfg.bits_per_module, cfg.biometric_version, cfg.biometric_level);
  return out;
}

OpenedPassport open_passport_barcodes(const PassportBarcodes& symbols, const BarcodeKeys& keys) {
  return {open_demographic(codec::qr_decode(symbols.demographic), keys),
          open_template(codec::hcc2d_decode(symbols.biometric), keys)};
}

}  // namespace pseal::payload
