#include "pseal/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>

#include "pseal/codec.hpp"
#include "pseal/crypto.hpp"
#include "pseal/evalkit.hpp"
#include "pseal/io.hpp"
#include "pseal/payload.hpp"
#include "pseal/pipeline.hpp"
#include "pseal/synth.hpp"

namespace pseal::cli {

namespace fs = std::filesystem;

int exit_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadPadding:
    case ErrorCode::kIntegrityFailure:
    case ErrorCode::kBadContainer:
    case ErrorCode::kUncorrectable:
    case ErrorCode::kFormatInfoCorrupt:
    case ErrorCode::kPaletteAmbiguous:
      return kExitUnavailable;
    case ErrorCode::kImageTooSmall:
    case ErrorCode::kThresholdOrder:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kDegenerateTriangle:
    case ErrorCode::kBadImageFile:
    case ErrorCode::kBadLandmarkFile:
    case ErrorCode::kEmptyPatch:
    case ErrorCode::kEmptySet:
    case ErrorCode::kEmptyGallery:
    case ErrorCode::kBinMismatch:
    case ErrorCode::kNotNormalized:
    case ErrorCode::kWeightSum:
    case ErrorCode::kInsufficientMarks:
    case ErrorCode::kKeyTooLong:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kInvalidKeyImage:
    case ErrorCode::kPayloadTooLarge:
    case ErrorCode::kInvalidMrzCharacter:
    case ErrorCode::kBadMagic:
    case ErrorCode::kChecksumMismatch:
    case ErrorCode::kTruncatedInput:
    case ErrorCode::kInvalidField:
    case ErrorCode::kZeroAreaBox:
    case ErrorCode::kEmptyScores:
    case ErrorCode::kDuplicateCandidate:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kBadConfig:
    case ErrorCode::kIo:
      return kExitInput;
  }
  return kExitInput;
}

namespace {

// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when sealed data cannot be opened; verify maps this to exit 3.
struct Unavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::uint64_t parse_u64(const std::string& what, const std::string& s) {
  const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
  const std::string digits = hex ? s.substr(2) : s;
  if (digits.empty() || digits.find_first_not_of(hex ? "0123456789abcdefABCDEF" : "0123456789") != std::string::npos ||
      digits.size() > (hex ? 16u : 20u))
    fail(ErrorCode::kBadConfig, what + ": '" + s + "' is not a 64-bit integer");
  errno = 0;
  const auto v = std::strtoull(digits.c_str(), nullptr, hex ? 16 : 10);
  if (errno == ERANGE) fail(ErrorCode::kBadConfig, what + ": '" + s + "' overflows 64 bits");
  return v;
}

std::array<std::uint8_t, 16> parse_iv16(const std::string& hex) {
  const auto bytes = io::from_hex(hex);
  if (bytes.size() != 16) fail(ErrorCode::kBadConfig, "--iv must be 32 hex digits");
  std::array<std::uint8_t, 16> iv{};
  std::copy(bytes.begin(), bytes.end(), iv.begin());
  return iv;
}

std::uint64_t load_u64(std::span<const std::uint8_t> b) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
  return v;
}

// IVs are a pure function of (seed, id) so reruns are byte-identical.
payload::BarcodeIvs derive_ivs(std::uint64_t seed, const std::string& id) {
  io::Bytes material;
  const std::string tag = "passport_seal/iv";
  material.insert(material.end(), tag.begin(), tag.end());
  io::put_u64(material, seed);
  material.insert(material.end(), id.begin(), id.end());
  const auto d1 = crypto::sha256(material);
  const auto d2 = crypto::sha256(d1);
  payload::BarcodeIvs ivs;
  std::copy_n(d1.begin(), 16, ivs.demographic.begin());
  ivs.biometric_sf = load_u64(std::span(d1).subspan(16, 8));
  std::copy_n(d2.begin(), 16, ivs.biometric.begin());
  return ivs;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) fail(ErrorCode::kIo, "missing " + what + " " + p.string());
}

void write_or_print(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
  if (path) io::write_text(*path, text);
  else out << text;
}

struct KeyOptions {
  std::string demographic_key;
  std::string sf_key;
  std::string biometric_key;

  void add(CLI::App* app) {
    app->add_option("--demographic-key", demographic_key, "Hybrid key string for the demographic symbol");
    app->add_option("--sf-key", sf_key, "Secure Force key (decimal or 0x hex)");
    app->add_option("--biometric-key", biometric_key, "Hybrid key string for the biometric symbol");
  }

  payload::BarcodeKeys keys() const {
    payload::BarcodeKeys k;
    k.demographic_key = demographic_key;
    k.biometric_key = biometric_key;
    if (!sf_key.empty()) k.biometric_sf_key = parse_u64("--sf-key", sf_key);
    return k;
  }
};

struct ProbeOptions {
  std::string image, landmarks, manifest;
  int row = -1;

  void add(CLI::App* app) {
    app->add_option("--image", image, "Probe image (PGM)");
    app->add_option("--landmarks", landmarks, "Probe landmark file");
    app->add_option("--manifest", manifest, "Take the probe from a manifest row instead");
    app->add_option("--row", row, "0-based manifest row");
  }

  pipeline::ManifestRow resolve() const {
    if (!manifest.empty()) {
      if (!image.empty() || !landmarks.empty()) throw UsageError("--manifest excludes --image/--landmarks");
      if (row < 0) throw UsageError("--manifest needs --row");
      const auto rows = pipeline::load_manifest(manifest);
      if (static_cast<size_t>(row) >= rows.size())
        fail(ErrorCode::kInvalidField, "manifest has " + std::to_string(rows.size()) + " rows, asked for row " +
                                           std::to_string(row));
      return rows[row];
    }
    if (image.empty() || landmarks.empty()) throw UsageError("need --image and --landmarks (or --manifest --row)");
    return pipeline::ManifestRow{"", image, landmarks, {}, {}, {}};
  }
};

struct Loaded {
  imaging::GrayImage image;
  geometry::LandmarkSet landmarks;
};

Loaded load_face(const pipeline::ManifestRow& row) {
  require_file(row.image, "image");
  require_file(row.landmarks, "landmark file");
  Loaded l;
  l.image = imaging::read_pgm(row.image);
  l.landmarks = geometry::load_landmarks(row.landmarks, geometry::Frame{l.image.width(), l.image.height()});
  return l;
}

pipeline::Matcher parse_matcher(const std::string& s) {
  if (s == "fmm") return pipeline::Matcher::kFmm;
  if (s == "caf2") return pipeline::Matcher::kCaf2;
  if (s == "caf1") return pipeline::Matcher::kCaf1;
  throw UsageError("--matcher must be fmm, caf2 or caf1");
}

// -- commands ------------------------------------------------------------------------------

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string config_path;

  pipeline::PipelineConfig config() const {
    std::string path = config_path;
    if (path.empty())
      if (const char* env = std::getenv(pipeline::kConfigEnv)) path = env;
    return path.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(path);
  }
};

struct EnrollOptions {
  std::string id, hand, demographic, out_dir;
  bool force = false;
  ProbeOptions face;
  KeyOptions keys;
};

int cmd_enroll(const Context& ctx, const EnrollOptions& o) {
  const auto cfg = ctx.config();
  auto row = o.face.resolve();
  if (!o.hand.empty()) row.hand = o.hand;
  const std::string id = o.id.empty() ? row.subject : o.id;
  if (id.empty()) throw UsageError("--id is required");
  if (id.find_first_of("/\\") != std::string::npos) fail(ErrorCode::kInvalidField, "--id must not contain path separators");
  if (cfg.cipher == payload::BiometricCipher::kSecureForce && o.keys.sf_key.empty())
    throw UsageError("--sf-key is required for the sf cipher");
  if (cfg.cipher == payload::BiometricCipher::kHybrid && o.keys.biometric_key.empty())
    throw UsageError("--biometric-key is required for the hybrid cipher");
  if (!o.demographic.empty() && o.keys.demographic_key.empty())
    throw UsageError("--demographic needs --demographic-key");

  const fs::path dir = o.out_dir;
  const fs::path bpt = dir / (id + ".bpt");
  if (fs::exists(bpt) && !o.force) {
    ctx.err << "error: " << id << " is already enrolled in " << dir.string() << " (use --force to replace)\n";
    return kExitInput;
  }

  const auto face = load_face(row);
  std::optional<handgeom::HandFeatureVector> hand;
  if (row.hand) {
    require_file(*row.hand, "hand landmark file");
    hand = handgeom::hand_features(handgeom::from_landmarks(geometry::load_landmarks(*row.hand)));
  }
  std::optional<payload::Demographic> demo;
  if (!o.demographic.empty()) {
    require_file(o.demographic, "demographic file");
    demo = payload::parse_demographic(io::read_text(o.demographic));
  }

  const auto processed =
      pipeline::process_face(face.image, face.landmarks, pipeline::mean_shape_for(cfg, face.landmarks.schema), cfg);
  const auto tmpl = pipeline::make_template(face.landmarks, processed.marks, hand, cfg.created_at);
  const auto keys = o.keys.keys();
  const auto ivs = derive_ivs(cfg.seed, id);

  const auto sealed = payload::seal_template(tmpl, cfg.cipher, keys, ivs);
  codec::SymbolMatrix bio;
  try {
    bio = codec::hcc2d_encode(sealed, cfg.bits_per_module, 0, cfg.biometric_level);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kPayloadTooLarge) throw;
    const auto b = payload::suggest_bits_per_module(sealed.size(), cfg.biometric_level);
    fail(ErrorCode::kPayloadTooLarge, "sealed template is " + std::to_string(sealed.size()) + " bytes; " +
                                          (b ? "suggested bits per module: " + std::to_string(*b)
                                             : std::string("no bits-per-module setting fits")));
  }

  fs::create_directories(dir);
  io::write_file(bpt, payload::serialize_template(tmpl));
  const bool sf = cfg.cipher == payload::BiometricCipher::kSecureForce;
  io::write_file(dir / (id + (sf ? ".bio.bps" : ".bio.bpc")), sealed);
  codec::write_symbol(dir / (id + (cfg.bits_per_module == 1 ? ".bio.pgm" : ".bio.ppm")), bio);
  if (demo) {
    const auto sealed_demo = payload::seal_demographic(*demo, keys, ivs);
    io::write_file(dir / (id + ".demo.bpc"), sealed_demo);
    codec::write_symbol(dir / (id + ".demo.pgm"), codec::qr_encode(sealed_demo, 0, cfg.demographic_level));
  }
  ctx.out << "enrolled " << id << " marks=" << tmpl.marks.marks.size() << '\n';
  return kExitOk;
}

struct VerifyOptions {
  std::string symbol, sealed, tmpl, matcher, gallery_image, gallery_landmarks;
  std::optional<double> face_score, tau;
  ProbeOptions probe;
  KeyOptions keys;
};

payload::BiometricTemplate open_claim(const VerifyOptions& o) {
  const int sources = !o.symbol.empty() + !o.sealed.empty() + !o.tmpl.empty();
  if (sources != 1) throw UsageError("give exactly one of --symbol, --sealed, --template");
  if (!o.tmpl.empty()) {
    require_file(o.tmpl, "template");
    return payload::deserialize_template(io::read_file(o.tmpl));
  }
  const std::string& path = o.symbol.empty() ? o.sealed : o.symbol;
  require_file(path, o.symbol.empty() ? "sealed template" : "symbol");
  try {
    const auto bytes = o.symbol.empty() ? io::read_file(path) : codec::read_symbol_file(path);
    return payload::open_template(bytes, o.keys.keys());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBadConfig) throw;
    throw Unavailable(e.what());
  }
}

int cmd_verify(const Context& ctx, const VerifyOptions& o) {
  auto cfg = ctx.config();
  if (!o.matcher.empty()) cfg.matcher = parse_matcher(o.matcher);
  if (o.tau) cfg.tau = *o.tau;
  pipeline::validate(cfg);
  const auto row = o.probe.resolve();
  std::optional<double> face_score = o.face_score ? o.face_score : row.face_score;

  const auto claim = open_claim(o);
  const auto probe = load_face(row);
  const auto mean = pipeline::mean_shape_for(cfg, probe.landmarks.schema);
  const auto processed = pipeline::process_face(probe.image, probe.landmarks, mean, cfg);

  pipeline::Comparison c;
  if (cfg.matcher == pipeline::Matcher::kCaf1) {
    if (o.gallery_image.empty() || o.gallery_landmarks.empty())
      throw UsageError("caf1 needs --gallery-image and --gallery-landmarks");
    const auto gallery = load_face({"", o.gallery_image, o.gallery_landmarks, {}, {}, {}});
    const auto warped = geometry::warp_to_mean(gallery.image, gallery.landmarks, mean);
    c = pipeline::compare_patches(matching::gallery_patches(claim.marks, warped), processed.warped, face_score, cfg);
  } else {
    c = pipeline::compare(claim.marks, processed.marks, face_score, cfg);
  }
  const bool accept = c.similarity >= cfg.tau;
  ctx.out << "score=" << fmt("%.6f", c.similarity) << " decision=" << (accept ? "accept" : "reject") << '\n';
  return accept ? kExitOk : kExitReject;
}

struct IdentifyOptions {
  std::string gallery, matcher;
  int top = 10;
  ProbeOptions probe;
};

int cmd_identify(const Context& ctx, const IdentifyOptions& o) {
  auto cfg = ctx.config();
  if (!o.matcher.empty()) cfg.matcher = parse_matcher(o.matcher);
  if (cfg.matcher == pipeline::Matcher::kCaf1) throw UsageError("identify compares templates; use fmm or caf2");
  if (!fs::is_directory(o.gallery)) fail(ErrorCode::kIo, "missing gallery directory " + o.gallery);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.gallery))
    if (e.is_regular_file() && e.path().extension() == ".bpt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::kEmptyGallery, "no .bpt templates in " + o.gallery);

  const auto probe = load_face(o.probe.resolve());
  const auto processed =
      pipeline::process_face(probe.image, probe.landmarks, pipeline::mean_shape_for(cfg, probe.landmarks.schema), cfg);
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& f : files) {
    const auto t = payload::deserialize_template(io::read_file(f));
    double s = 0;
    if (!t.marks.marks.empty()) s = pipeline::compare(t.marks, processed.marks, std::nullopt, cfg).similarity;
    ranked.emplace_back(f.stem().string(), s);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.second > b.second; });
  const size_t n = std::min(ranked.size(), static_cast<size_t>(std::max(o.top, 1)));
  for (size_t i = 0; i < n; ++i) ctx.out << i + 1 << ' ' << ranked[i].first << ' ' << fmt("%.6f", ranked[i].second) << '\n';
  return kExitOk;
}

struct EvalOptions {
  std::string manifest, protocol, report, curve, scores, face_scores, matcher;
  std::optional<int> folds;
  std::optional<std::uint64_t> seed;
  int max_rank = 10;
};

int cmd_eval(const Context& ctx, const EvalOptions& o) {
  auto cfg = ctx.config();
  if (!o.matcher.empty()) cfg.matcher = parse_matcher(o.matcher);
  if (o.seed) cfg.seed = *o.seed;
  const auto rows = pipeline::load_manifest(o.manifest);
  evalkit::Report r;
  r.title = o.protocol + " (" + std::to_string(rows.size()) + " rows)";

  if (o.protocol == "detection") {
    const auto d = pipeline::eval_detection(rows, cfg);
    const auto& t = d.tally;
    r.header = {"images", "tp", "fp", "fn", "precision", "recall"};
    r.rows.push_back({std::to_string(d.images), std::to_string(t.tp), std::to_string(t.fp), std::to_string(t.fn),
                      fmt("%.4f", t.precision()), fmt("%.4f", t.recall())});
    r.metrics = {{"precision", t.precision()}, {"recall", t.recall()}, {"t0", cfg.t0}, {"images", double(d.images)}};
  } else if (o.protocol == "verification") {
    pipeline::FaceScores face;
    if (!o.face_scores.empty()) {
      require_file(o.face_scores, "face score file");
      face = pipeline::parse_face_scores(io::read_text(o.face_scores));
    }
    const auto v = pipeline::eval_verification(rows, cfg, o.face_scores.empty() ? nullptr : &face);
    const double frr = v.roc.frr_at_far.empty() ? 0 : v.roc.frr_at_far.front().second;
    if (v.fusion.empty()) {
      r.header = {"genuine", "impostor", "eer", "frr@far=0.1%"};
      r.rows.push_back({std::to_string(v.scores.genuine.size()), std::to_string(v.scores.impostor.size()),
                        fmt("%.4f", v.roc.eer), fmt("%.4f", frr)});
    } else {
      r.header = {"w_fr", "w_fmm", "eer"};
      for (const auto& f : v.fusion) r.rows.push_back({fmt("%.1f", f.w_fr), fmt("%.1f", f.w_fmm), fmt("%.4f", f.eer)});
    }
    r.metrics = {{"eer", v.roc.eer},
                 {"frr_at_far_0.001", frr},
                 {"genuine_pairs", double(v.scores.genuine.size())},
                 {"impostor_pairs", double(v.scores.impostor.size())}};
    if (!o.curve.empty()) io::write_text(o.curve, evalkit::curve_csv(v.roc));
    if (!o.scores.empty()) io::write_text(o.scores, matching::format_scores(v.records));
  } else if (o.protocol == "identification") {
    const int folds = o.folds.value_or(5);
    const auto id = pipeline::eval_identification(rows, cfg, folds, o.max_rank);
    r.header = {"rank", "arr"};
    for (size_t k = 0; k < id.arr.size(); ++k) r.rows.push_back({std::to_string(k + 1), fmt("%.4f", id.arr[k])});
    r.metrics = {{"arr_r1", id.arr.front()}, {"folds", double(folds)}, {"trials", double(id.trials)}};
  } else if (o.protocol == "hand") {
    const int folds = o.folds.value_or(10);
    const double acc = pipeline::eval_hand(rows, folds);
    r.header = {"folds", "accuracy"};
    r.rows.push_back({std::to_string(folds), fmt("%.4f", acc)});
    r.metrics = {{"accuracy", acc}};
  } else {
    throw UsageError("--protocol must be detection, verification, identification or hand");
  }
  write_or_print(o.report.empty() ? std::nullopt : std::optional(o.report), evalkit::format_report(r), ctx.out);
  return kExitOk;
}

struct SynthOptions {
  std::string out_dir;
  int subjects = 10, samples = 4, specks = 2, min_marks = 3, max_marks = 8;
  bool hands = false;
  std::uint64_t seed = 1;
};

int cmd_synth(const Context& ctx, const SynthOptions& o) {
  if (o.subjects < 1 || o.samples < 1 || o.specks < 0 || o.min_marks < 0 || o.max_marks < o.min_marks)
    throw UsageError("need subjects >= 1, samples >= 1, specks >= 0 and 0 <= min-marks <= max-marks");
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  std::mt19937_64 rng(o.seed);
  synth::FaceOptions opt;
  opt.min_marks = o.min_marks;
  opt.max_marks = o.max_marks;
  opt.specks = o.specks;
  std::vector<pipeline::ManifestRow> rows;
  for (int s = 0; s < o.subjects; ++s) {
    char sid[16];
    std::snprintf(sid, sizeof sid, "s%03d", s);
    const auto subject = synth::random_subject(rng, opt);
    const auto hand = synth::random_hand(rng);

    payload::Demographic d;
    d.document_type = "P";
    d.issuing_state = "UTO";
    d.holder_name = std::string("SUBJECT ") + sid;
    char num[16];
    std::snprintf(num, sizeof num, "X%08d", static_cast<int>(rng() % 100000000));
    d.document_number = num;
    d.nationality = "UTO";
    d.date_of_birth = "800101";
    d.sex = (s % 2) ? 'F' : 'M';
    d.date_of_expiry = "351231";
    io::write_text(dir / (std::string(sid) + ".demo"), payload::format_demographic(d));

    for (int k = 0; k < o.samples; ++k) {
      const std::string base = std::string(sid) + "_" + std::to_string(k);
      const auto sample = synth::render_face(subject, synth::random_pose(rng), rng, opt);
      imaging::write_pgm(dir / (base + ".pgm"), sample.image);
      io::write_text(dir / (base + ".lm"), geometry::format_landmarks(sample.landmarks));
      std::vector<marks::AnnotatedBox> truth;
      for (const auto& b : sample.truth) truth.push_back({b, marks::Category::kOther});
      io::write_text(dir / (base + ".marks"), marks::format_mark_file(truth));
      pipeline::ManifestRow row{sid, dir / (base + ".pgm"), dir / (base + ".lm"), dir / (base + ".marks"), {}, {}};
      if (o.hands) {
        io::write_text(dir / (base + ".hand.lm"), geometry::format_landmarks(synth::render_hand(hand, rng)));
        row.hand = dir / (base + ".hand.lm");
      }
      rows.push_back(std::move(row));
    }
  }
  io::write_text(dir / "manifest.tsv", pipeline::format_manifest(rows, dir));
  ctx.out << "wrote " << rows.size() << " samples of " << o.subjects << " subjects to " << (dir / "manifest.tsv").string()
          << '\n';
  return kExitOk;
}

struct CodecOptions {
  std::string input, out, ec = "M";
  bool qr = false, hcc2d = false;
  int bits = 3, version = 0, mask = -1;
};

int cmd_codec_encode(const Context& ctx, const CodecOptions& o) {
  if (o.qr && o.hcc2d) throw UsageError("--qr and --hcc2d are exclusive");
  require_file(o.input, "input file");
  const auto data = io::read_file(o.input);
  const int b = o.hcc2d ? o.bits : 1;
  if (b < 1 || b > 3) throw UsageError("--bits must be 1, 2 or 3");
  const auto level = codec::parse_ec_level(o.ec);
  const auto m = codec::hcc2d_encode(data, b, o.version, level, o.mask);
  const fs::path out = o.out.empty() ? fs::path(o.input + (b == 1 ? ".pgm" : ".ppm")) : fs::path(o.out);
  codec::write_symbol(out, m);
  ctx.out << "encoded " << data.size() << " bytes as " << codec::sidecar_line(m) << " -> " << out.string() << '\n';
  return kExitOk;
}

int cmd_codec_decode(const Context& ctx, const CodecOptions& o) {
  require_file(o.input, "symbol");
  const auto data = codec::read_symbol_file(o.input);
  if (o.out.empty()) ctx.out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  else io::write_file(o.out, data);
  return kExitOk;
}

struct CryptoOptions {
  std::string input, out, key, key_file, iv, share_s, share_t, prefix = "share";
  std::optional<std::uint64_t> seed;
};

io::Bytes key_string(const CryptoOptions& o) {
  if (o.key.empty() == o.key_file.empty()) throw UsageError("give exactly one of --key, --key-file");
  if (!o.key_file.empty()) {
    require_file(o.key_file, "key file");
    return io::read_file(o.key_file);
  }
  return io::Bytes(o.key.begin(), o.key.end());
}

void emit_bytes(const Context& ctx, const CryptoOptions& o, const io::Bytes& data, bool hex_on_stdout) {
  if (!o.out.empty()) io::write_file(o.out, data);
  else if (hex_on_stdout) ctx.out << io::to_hex(data) << '\n';
  else ctx.out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

io::Bytes read_input(const CryptoOptions& o) {
  require_file(o.input, "input file");
  return io::read_file(o.input);
}

int cmd_crypto(const Context& ctx, const std::string& op, const CryptoOptions& o) {
  if (op == "sf-encrypt" || op == "sf-decrypt") {
    if (o.key.empty()) throw UsageError("--key is required");
    const auto key = parse_u64("--key", o.key);
    const auto data = read_input(o);
    if (op == "sf-encrypt") {
      if (o.iv.empty()) throw UsageError("--iv is required");
      emit_bytes(ctx, o, crypto::sf_encrypt_bytes(data, key, parse_u64("--iv", o.iv)), true);
    } else {
      emit_bytes(ctx, o, crypto::sf_decrypt_bytes(data, key), false);
    }
  } else if (op == "hybrid-encrypt") {
    if (o.iv.empty() == !o.seed) throw UsageError("give exactly one of --iv, --seed");
    std::array<std::uint8_t, 16> iv{};
    if (!o.iv.empty()) {
      iv = parse_iv16(o.iv);
    } else {
      io::Bytes m;
      io::put_u64(m, *o.seed);
      const auto d = crypto::sha256(m);
      std::copy_n(d.begin(), 16, iv.begin());
    }
    const auto c = crypto::hybrid_encrypt(read_input(o), key_string(o), iv);
    emit_bytes(ctx, o, crypto::serialize_ciphertext(c), true);
  } else if (op == "hybrid-decrypt") {
    const auto c = crypto::deserialize_ciphertext(read_input(o));
    emit_bytes(ctx, o, crypto::hybrid_decrypt(c, key_string(o)), false);
  } else if (op == "make-shares") {
    const auto shares = crypto::make_key_shares(key_string(o), o.seed.value_or(0));
    const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    fs::create_directories(dir);
    imaging::write_pgm(dir / (o.prefix + "_s.pgm"), crypto::share_to_image(shares.share_s));
    imaging::write_pgm(dir / (o.prefix + "_t.pgm"), crypto::share_to_image(shares.share_t));
    ctx.out << "wrote " << (dir / (o.prefix + "_s.pgm")).string() << ' ' << (dir / (o.prefix + "_t.pgm")).string()
            << '\n';
  } else if (op == "recover-key") {
    require_file(o.share_s, "share");
    require_file(o.share_t, "share");
    const auto s = crypto::image_to_share(imaging::read_pgm(o.share_s));
    const auto t = crypto::image_to_share(imaging::read_pgm(o.share_t));
    emit_bytes(ctx, o, crypto::recover_key(s, t), false);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, {}};
  CLI::App app{"Facial-mark passport sealing: enrolment, verification and evaluation", "passport_seal"};
  app.require_subcommand(1);
  app.add_option("--config", ctx.config_path, "Config file (default: $PASSPORT_SEAL_CONFIG)");
  std::function<int()> action;

  auto* config = app.add_subcommand("config", "Print the effective configuration");
  config->callback([&] {
    action = [&] {
      out << pipeline::format_config(ctx.config());
      return kExitOk;
    };
  });

  EnrollOptions en;
  auto* enroll = app.add_subcommand("enroll", "Build a template and its barcode symbols");
  enroll->add_option("--id", en.id, "Identity (defaults to the manifest subject)");
  en.face.add(enroll);
  enroll->add_option("--hand", en.hand, "Hand16 landmark file");
  enroll->add_option("--demographic", en.demographic, "Demographic record (key = value lines)");
  enroll->add_option("--out", en.out_dir, "Output directory")->required();
  enroll->add_flag("--force", en.force, "Replace an existing enrolment");
  en.keys.add(enroll);
  enroll->callback([&] { action = [&] { return cmd_enroll(ctx, en); }; });

  VerifyOptions ve;
  auto* verify = app.add_subcommand("verify", "Compare a probe face against a sealed template");
  verify->add_option("--symbol", ve.symbol, "Biometric barcode symbol (PGM/PPM)");
  verify->add_option("--sealed", ve.sealed, "Sealed biometric bytes (.bps/.bpc)");
  verify->add_option("--template", ve.tmpl, "Plain template (.bpt)");
  ve.probe.add(verify);
  verify->add_option("--face-score", ve.face_score, "External face similarity in [0,1] to fuse");
  verify->add_option("--tau", ve.tau, "Decision threshold on similarity");
  verify->add_option("--matcher", ve.matcher, "fmm, caf2 or caf1");
  verify->add_option("--gallery-image", ve.gallery_image, "Enrolment image (caf1)");
  verify->add_option("--gallery-landmarks", ve.gallery_landmarks, "Enrolment landmarks (caf1)");
  ve.keys.add(verify);
  verify->callback([&] { action = [&] { return cmd_verify(ctx, ve); }; });

  IdentifyOptions id;
  auto* identify = app.add_subcommand("identify", "Rank a gallery of templates against a probe");
  identify->add_option("--gallery", id.gallery, "Directory of .bpt templates")->required();
  id.probe.add(identify);
  identify->add_option("--top", id.top, "Candidates to print");
  identify->add_option("--matcher", id.matcher, "fmm or caf2");
  identify->callback([&] { action = [&] { return cmd_identify(ctx, id); }; });

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Run an evaluation protocol over a manifest");
  eval->add_option("--manifest", ev.manifest, "Manifest TSV")->required();
  eval->add_option("--protocol", ev.protocol, "detection, verification, identification or hand")->required();
  eval->add_option("--folds", ev.folds, "Cross-validation folds");
  eval->add_option("--max-rank", ev.max_rank, "Largest CMC rank");
  eval->add_option("--seed", ev.seed, "Fold assignment seed");
  eval->add_option("--matcher", ev.matcher, "fmm, caf2 or caf1");
  eval->add_option("--report", ev.report, "Write the report here instead of stdout");
  eval->add_option("--curve", ev.curve, "ROC points as CSV (verification)");
  eval->add_option("--scores", ev.scores, "Pair scores (verification)");
  eval->add_option("--face-scores", ev.face_scores, "Face scores to fuse (verification)");
  eval->callback([&] { action = [&] { return cmd_eval(ctx, ev); }; });

  SynthOptions sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic face corpus and manifest");
  synth_cmd->add_option("--out", sy.out_dir, "Output directory")->required();
  synth_cmd->add_option("--subjects", sy.subjects, "Number of subjects");
  synth_cmd->add_option("--samples", sy.samples, "Samples per subject");
  synth_cmd->add_option("--specks", sy.specks, "2x2 specks per face");
  synth_cmd->add_option("--min-marks", sy.min_marks, "Fewest planted marks per subject");
  synth_cmd->add_option("--max-marks", sy.max_marks, "Most planted marks per subject");
  synth_cmd->add_flag("--hands", sy.hands, "Also write Hand16 landmark files");
  synth_cmd->add_option("--seed", sy.seed, "Generator seed");
  synth_cmd->callback([&] { action = [&] { return cmd_synth(ctx, sy); }; });

  CodecOptions co;
  auto* codec_cmd = app.add_subcommand("codec", "Encode or decode barcode symbols");
  codec_cmd->require_subcommand(1);
  auto* encode = codec_cmd->add_subcommand("encode", "File to symbol image");
  encode->add_option("input", co.input, "Payload file")->required();
  encode->add_flag("--qr", co.qr, "Plain QR (default)");
  encode->add_flag("--hcc2d", co.hcc2d, "Color HCC2D symbol");
  encode->add_option("--bits", co.bits, "Bits per module for --hcc2d");
  encode->add_option("--ec", co.ec, "Error correction level L, M, Q or H");
  encode->add_option("--version", co.version, "Symbol version 1-10 (0 = smallest fitting)");
  encode->add_option("--mask", co.mask, "Mask 0-7 (-1 = best)");
  encode->add_option("--out", co.out, "Symbol path");
  encode->callback([&] { action = [&] { return cmd_codec_encode(ctx, co); }; });
  auto* decode = codec_cmd->add_subcommand("decode", "Symbol image to file");
  decode->add_option("input", co.input, "Symbol image")->required();
  decode->add_option("--out", co.out, "Payload path (default: stdout)");
  decode->callback([&] { action = [&] { return cmd_codec_decode(ctx, co); }; });

  CryptoOptions cr;
  std::string crypto_op;
  auto* crypto_cmd = app.add_subcommand("crypto", "Cipher and key-share utilities");
  crypto_cmd->require_subcommand(1);
  for (const char* name : {"sf-encrypt", "sf-decrypt", "hybrid-encrypt", "hybrid-decrypt"}) {
    auto* sub = crypto_cmd->add_subcommand(name);
    sub->add_option("input", cr.input, "Input file")->required();
    sub->add_option("--key", cr.key, std::string(name).starts_with("sf") ? "64-bit key" : "Key string");
    if (!std::string(name).starts_with("sf")) sub->add_option("--key-file", cr.key_file, "Key string file");
    if (std::string(name).ends_with("encrypt")) sub->add_option("--iv", cr.iv, "IV");
    if (std::string(name) == "hybrid-encrypt") sub->add_option("--seed", cr.seed, "Derive the IV from a seed");
    sub->add_option("--out", cr.out, "Output file (default: stdout, hex for ciphertext)");
    sub->callback([&, name] { action = [&, name] { return cmd_crypto(ctx, name, cr); }; });
  }
  auto* shares = crypto_cmd->add_subcommand("make-shares", "Split a key string into two share images");
  shares->add_option("--key", cr.key, "Key string");
  shares->add_option("--key-file", cr.key_file, "Key string file");
  shares->add_option("--seed", cr.seed, "Share seed");
  shares->add_option("--out", cr.out, "Output directory");
  shares->add_option("--prefix", cr.prefix, "File prefix");
  shares->callback([&] { action = [&] { return cmd_crypto(ctx, "make-shares", cr); }; });
  auto* recover = crypto_cmd->add_subcommand("recover-key", "Rebuild a key string from two shares");
  recover->add_option("share_s", cr.share_s, "First share")->required();
  recover->add_option("share_t", cr.share_t, "Second share")->required();
  recover->add_option("--out", cr.out, "Key file (default: stdout)");
  recover->callback([&] { action = [&] { return cmd_crypto(ctx, "recover-key", cr); }; });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << " (see --help)\n";
    return kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Unavailable& e) {
    err << "verification unavailable: " << e.what() << '\n';
    return kExitUnavailable;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_class(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace pseal::cli
