// Runs the acceptance checks twice and prints one PASS/FAIL line per check.
// Every check feeds what it computed into a transcript; the determinism check
// compares the transcripts of the two passes.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pseal/cli.hpp"
#include "pseal/codec.hpp"
#include "pseal/crypto.hpp"
#include "pseal/error.hpp"
#include "pseal/evalkit.hpp"
#include "pseal/geometry.hpp"
#include "pseal/handgeom.hpp"
#include "pseal/io.hpp"
#include "pseal/matching.hpp"
#include "pseal/pipeline.hpp"
#include "pseal/rs.hpp"
#include "pseal/synth.hpp"
#include "scratch_dir.hpp"
#include "symbol_damage.hpp"

using namespace pseal;
namespace fs = std::filesystem;

namespace {

using Bytes = io::Bytes;

class Transcript {
 public:
  void add(std::string_view tag, std::span<const std::uint8_t> bytes) {
    text_ += tag;
    text_ += ':';
    text_ += io::to_hex(crypto::sha256(bytes));
    text_ += '\n';
  }
  void add(std::string_view tag, const std::string& s) {
    add(tag, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }
  void add(std::string_view tag, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    add(tag, std::string(buf));
  }
  std::string digest() const { return io::to_hex(crypto::sha256(std::span(
      reinterpret_cast<const std::uint8_t*>(text_.data()), text_.size()))); }

 private:
  std::string text_;
};

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> notes;  // printed under the result line

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

struct Check {
  int id;
  std::string name;
  double limit_s;  // 0: no runtime limit
  std::function<Outcome(Transcript&)> run;
};

Bytes random_bytes(std::mt19937_64& rng, size_t n) {
  Bytes b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(rng());
  return b;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// -- 1 ------------------------------------------------------------------------------

Outcome crypto_round_trips(Transcript& tr) {
  Outcome o;
  std::mt19937_64 rng(101);
  int bad = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::uint64_t key = rng(), m = rng();
    const auto ks = crypto::sf_key_expand(key);
    const auto c = crypto::sf_encrypt_block(m, ks);
    bad += crypto::sf_decrypt_block(c, ks) != m;
    if (t % 1000 == 0) tr.add("sf", static_cast<double>(c));
  }
  o.expect(bad == 0, std::to_string(bad) + " random SF blocks failed");

  bad = 0;
  for (int k = 0; k < 8; ++k) {
    const auto ks = crypto::sf_key_expand(rng());
    const std::uint64_t high = rng() & ~std::uint64_t{0xFFFF};
    for (std::uint64_t low = 0; low < 65536; ++low)
      bad += crypto::sf_decrypt_block(crypto::sf_encrypt_block(high | low, ks), ks) != (high | low);
  }
  o.expect(bad == 0, std::to_string(bad) + " low-16-bit sweep blocks failed");

  bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const Bytes payload = random_bytes(rng, rng() % 900);
    const Bytes key = random_bytes(rng, 1 + rng() % 64);
    std::array<std::uint8_t, 16> iv{};
    for (auto& b : iv) b = static_cast<std::uint8_t>(rng());
    const auto c = crypto::hybrid_encrypt(payload, key, iv);
    const auto wire = crypto::serialize_ciphertext(c);
    bad += crypto::hybrid_decrypt(crypto::deserialize_ciphertext(wire), key) != payload;
    if (t % 100 == 0) tr.add("hybrid", wire);
  }
  o.expect(bad == 0, std::to_string(bad) + " hybrid payloads failed");

  const Bytes pt = io::from_hex("00112233445566778899aabbccddeeff");
  std::array<std::uint8_t, 16> block{};
  std::copy(pt.begin(), pt.end(), block.begin());
  const std::pair<const char*, const char*> fips[] = {
      {"000102030405060708090a0b0c0d0e0f", "69c4e0d86a7b0430d8cdb78070b4c55a"},
      {"000102030405060708090a0b0c0d0e0f1011121314151617", "dda97ca4864cdfe06eaf70a0ec0d7191"},
      {"000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f", "8ea2b7ca516745bfeafc49904b496089"},
  };
  for (const auto& [key_hex, ct_hex] : fips) {
    const Bytes key = io::from_hex(key_hex);
    const auto ct = crypto::aes_encrypt_block(key, block);
    o.expect(io::to_hex(ct) == ct_hex, std::string("AES vector mismatch for key ") + key_hex);
    o.expect(crypto::aes_decrypt_block(key, ct) == block, "AES inverse failed");
  }
  if (o.pass) o.detail = "10000 SF pairs, 8x65536 sweep, 1000 hybrid payloads, 3 FIPS-197 vectors";
  return o;
}

// -- 2 ------------------------------------------------------------------------------

Outcome sf_diffusion(Transcript& tr) {
  Outcome o;
  std::mt19937_64 rng(202);
  double total = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const auto ks = crypto::sf_key_expand(rng());
    const std::uint64_t m = rng(), m2 = m ^ (std::uint64_t{1} << (rng() % 64));
    total += std::popcount(crypto::sf_encrypt_block(m, ks) ^ crypto::sf_encrypt_block(m2, ks));
  }
  const double mean = total / trials;
  tr.add("avalanche", mean);
  o.expect(mean >= 16.0, fmt("mean Hamming distance %.3f < 16", mean));
  const auto kat = crypto::sf_encrypt_block(0x0808080808080808ULL, crypto::sf_key_expand(0));
  o.expect(kat == 0x7d3a82b1beb96b13ULL, "frozen SF known answer changed");
  if (o.pass) o.detail = fmt("mean Hamming distance %.2f of 64 bits", mean);
  return o;
}

// -- 3 ------------------------------------------------------------------------------

Outcome share_scheme(Transcript& tr) {
  Outcome o;
  std::mt19937_64 rng(303);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    Bytes key(1 + rng() % 64);
    for (auto& b : key) b = static_cast<std::uint8_t>(1 + rng() % 255);
    const auto sh = crypto::make_key_shares(key, rng());
    bad += crypto::recover_key(sh.share_s, sh.share_t) != key;
  }
  o.expect(bad == 0, std::to_string(bad) + " keys not recovered");

  // Pool long keys until each share has at least 10^5 cells.
  long ones_s = 0, ones_t = 0, cells = 0;
  while (cells < 100000) {
    Bytes key(64);
    for (auto& b : key) b = static_cast<std::uint8_t>(1 + rng() % 255);
    const auto sh = crypto::make_key_shares(key, rng());
    for (auto v : sh.share_s.data()) ones_s += v;
    for (auto v : sh.share_t.data()) ones_t += v;
    cells += static_cast<long>(sh.share_s.size());
  }
  auto chi2 = [&](long ones) {
    const double e = cells / 2.0;
    return 2 * (ones - e) * (ones - e) / e;
  };
  const double cs = chi2(ones_s), ct = chi2(ones_t);
  tr.add("chi2", cs + 1000 * ct);
  o.expect(cs < 10.828, fmt("share S chi-square %.3f", cs));
  o.expect(ct < 10.828, fmt("share T chi-square %.3f", ct));
  if (o.pass) o.detail = fmt("1000 keys recovered; chi-square S %.2f, T %.2f over %.0f cells", cs, ct, cells);
  return o;
}

// -- 4 ------------------------------------------------------------------------------

// Per-block EC codeword counts used by QR versions 1-10.
constexpr std::array kQrEcLengths{7, 10, 13, 15, 16, 17, 18, 20, 22, 24, 26, 28, 30};

Outcome codec_checks(Transcript& tr) {
  using namespace codec;
  Outcome o;
  std::mt19937_64 rng(404);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const int v = 1 + t % 10;
    const auto level = static_cast<EcLevel>((t / 10) % 4);
    const Bytes p = random_bytes(rng, rng() % (byte_capacity(v, level) + 1));
    const auto m = qr_encode(p, v, level);
    bad += qr_decode(m) != p || decode_raster(render_gray(m)) != p;
    if (t % 50 == 0) tr.add("qr", m.modules);
  }
  o.expect(bad == 0, std::to_string(bad) + " QR payloads failed");

  int corrected = 0, reported = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n_ec = kQrEcLengths[rng() % kQrEcLengths.size()];
    const Bytes data = random_bytes(rng, 1 + rng() % 150);
    Bytes word = data;
    const Bytes ec = rs::encode(data, n_ec);
    word.insert(word.end(), ec.begin(), ec.end());
    auto inject = [&](Bytes w, int count) {
      std::set<size_t> pos;
      while (static_cast<int>(pos.size()) < count) pos.insert(rng() % w.size());
      for (size_t q : pos) w[q] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      return w;
    };
    const auto fixed = rs::decode(inject(word, n_ec / 2), n_ec);
    corrected += fixed.data == data;
    try {
      rs::decode(inject(word, n_ec / 2 + 1), n_ec);
    } catch (const Error& e) {
      reported += e.code() == ErrorCode::kUncorrectable;
    }
  }
  tr.add("rs", static_cast<double>(reported));
  o.expect(corrected == 1000, std::to_string(corrected) + "/1000 corrected at capacity");
  o.expect(reported >= 990, std::to_string(reported) + "/1000 failures reported past capacity");

  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  int hcc_bad = 0, same_as_qr = 0;
  const int per_b = 150;
  for (int b = 1; b <= 3; ++b) {
    for (int t = 0; t < per_b; ++t) {
      const int v = 1 + static_cast<int>(rng() % 10);
      const auto level = static_cast<EcLevel>(rng() % 4);
      const Bytes p = random_bytes(rng, rng() % (byte_capacity(v, level, b) + 1));
      const auto m = hcc2d_encode(p, b, v, level);
      auto img = render(m);
      if (b <= 2)
        for (auto& px : img.data()) {
          px.r = std::clamp(px.r + noise(rng), 0.0, 1.0);
          px.g = std::clamp(px.g + noise(rng), 0.0, 1.0);
          px.b = std::clamp(px.b + noise(rng), 0.0, 1.0);
        }
      hcc_bad += decode_raster(img) != p;
      if (b == 1) same_as_qr += m == qr_encode(p, v, level);
      if (t % 30 == 0) tr.add("hcc2d", m.modules);
    }
  }
  o.expect(hcc_bad == 0, std::to_string(hcc_bad) + " HCC2D rasters failed");
  o.expect(same_as_qr == per_b, "b=1 HCC2D differs from QR");
  if (o.pass)
    o.detail = fmt("1000 QR, RS %.0f/1000 corrected, %.0f/1000 reported; HCC2D b=1..3 clean", corrected, reported);
  return o;
}

// -- 5 ------------------------------------------------------------------------------

Outcome geometry_checks(Transcript& tr) {
  using namespace geometry;
  Outcome o;
  const auto mean = synth::default_mean_shape();
  std::mt19937_64 rng(505);
  double worst_warp = 0;
  for (int t = 0; t < 5; ++t) {
    const auto face = synth::render_face(synth::random_subject(rng), {}, rng, {.landmark_jitter = 0});
    const LandmarkSet lm{mean.schema, mean.points, LandmarkSource::kAnnotationFile};
    const auto out = warp_to_mean(face.image, lm, mean);
    const PiecewiseAffine pa(mean, lm);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        if (pa.to_source({double(x), double(y)}))
          worst_warp = std::max(worst_warp, std::abs(out.at(x, y) - face.image.at(x, y)));
    tr.add("warp", std::span(reinterpret_cast<const std::uint8_t*>(out.data().data()), out.size() * sizeof(double)));
  }
  o.expect(worst_warp <= 1e-6, fmt("identity warp error %.3g", worst_warp));

  std::uniform_real_distribution<double> u(-50, 300);
  double worst_bc = 0;
  for (int i = 0; i < 100000; ++i) {
    const Point a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)}, p{u(rng), u(rng)};
    if (std::abs(signed_area(a, b, c)) < 1) continue;
    const auto q = recombine(barycentric_coords(p, a, b, c, 256), a, b, c);
    worst_bc = std::max({worst_bc, std::abs(q.x - p.x) / 256, std::abs(q.y - p.y) / 256});
  }
  o.expect(worst_bc <= 1e-9, fmt("barycentric recombination error %.3g", worst_bc));

  int vertex_misses = 0;
  for (int t = 0; t < 20; ++t) {
    const auto face = synth::render_face(synth::random_subject(rng), synth::random_pose(rng), rng);
    const PiecewiseAffine pa(mean, face.landmarks);
    for (size_t i = 0; i < mean.points.size(); ++i) {
      const auto s = pa.to_source(mean.points[i]);
      vertex_misses += !s || s->x != face.landmarks.points[i].x || s->y != face.landmarks.points[i].y;
    }
  }
  o.expect(vertex_misses == 0, std::to_string(vertex_misses) + " vertices not mapped exactly");
  if (o.pass) o.detail = fmt("warp error %.2g, recombination error %.2g (frame units)", worst_warp, worst_bc);
  return o;
}

// -- 6 ------------------------------------------------------------------------------

bool overlaps(const imaging::Box& a, const imaging::Box& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

Outcome detection_checks(Transcript& tr) {
  Outcome o;
  std::mt19937_64 rng(606);
  synth::FaceOptions opt;
  opt.specks = 2;
  const pipeline::PipelineConfig cfg;
  o.expect(std::abs(cfg.detector.sigma - std::numbers::sqrt2) < 1e-12, "detector sigma is not sqrt(2)");
  o.expect(cfg.detector.component_trigger == 10, "component trigger is not 10");
  o.expect(cfg.detector.min_size == 3, "min size is not 3");
  evalkit::DetectionTally total;
  int speck_hits = 0, specks = 0;
  const auto mean = synth::default_mean_shape();
  for (int f = 0; f < 100; ++f) {
    const auto sample = synth::render_face(synth::random_subject(rng, opt), synth::random_pose(rng), rng, opt);
    const auto face = pipeline::process_face(sample.image, sample.landmarks, mean, cfg);
    std::vector<imaging::Box> det;
    for (const auto& m : face.marks.marks) det.push_back(m.bbox);
    total += evalkit::score_detections(sample.truth, det, 0.4);
    specks += static_cast<int>(sample.specks.size());
    for (const auto& sp : sample.specks)
      for (const auto& d : det) {
        const bool on_mark =
            std::any_of(sample.truth.begin(), sample.truth.end(), [&](const auto& t) { return overlaps(d, t); });
        speck_hits += overlaps(d, sp) && !on_mark;
      }
    tr.add("marks", marks::format_mark_set(face.marks));
  }
  o.expect(total.precision() >= 0.9, fmt("precision %.4f", total.precision()));
  o.expect(total.recall() >= 0.9, fmt("recall %.4f", total.recall()));
  o.expect(speck_hits == 0, std::to_string(speck_hits) + " detections on specks");
  if (o.pass)
    o.detail = fmt("precision %.4f, recall %.4f over 100 faces; ", total.precision(), total.recall()) +
               std::to_string(specks) + " specks rejected";
  return o;
}

// -- 7 ------------------------------------------------------------------------------

template <size_t N>
std::array<double, N> random_hist(std::mt19937_64& rng) {
  std::array<double, N> h{};
  std::uniform_real_distribution<double> u(0, 1);
  double s = 0;
  for (auto& v : h) s += v = u(rng) < 0.4 ? 0.0 : u(rng);
  if (s == 0) h[0] = s = 1;
  for (auto& v : h) v /= s;
  return h;
}

double hellinger(std::span<const double> a, std::span<const double> b) {
  double bc = 0;
  for (size_t i = 0; i < a.size(); ++i) bc += std::sqrt(a[i] * b[i]);
  return std::sqrt(std::max(0.0, 1.0 - bc));
}

// Full distance matrix first, then per-row minima over in-region pairs.
double brute_fmm(const marks::MarkSet& g, const marks::MarkSet& p, double hw) {
  const size_t n = g.marks.size(), m = p.marks.size();
  std::vector<double> d(n * m);
  std::vector<bool> inside(n * m);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) {
      d[i * m + j] = hellinger(g.marks[i].intensity_hist, p.marks[j].intensity_hist);
      inside[i * m + j] = std::abs(g.marks[i].center.x - p.marks[j].center.x) <= hw &&
                          std::abs(g.marks[i].center.y - p.marks[j].center.y) <= hw;
    }
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    double best = 1.0;
    for (size_t j = 0; j < m; ++j)
      if (inside[i * m + j]) best = std::min(best, d[i * m + j]);
    total += best;
  }
  return total / static_cast<double>(n);
}

// Every window of the probe, kept when its center falls in the region.
double brute_caf1(std::span<const matching::GalleryPatch> gallery, const imaging::GrayImage& probe, double hw) {
  double total = 0;
  for (const auto& gp : gallery) {
    const int w = gp.patch.width(), h = gp.patch.height();
    double best = 0;
    for (int y0 = 0; y0 + h <= probe.height(); ++y0)
      for (int x0 = 0; x0 + w <= probe.width(); ++x0) {
        const geometry::Point c{(x0 + w / 2.0) / probe.width(), (y0 + h / 2.0) / probe.height()};
        if (std::abs(c.x - gp.center.x) > hw || std::abs(c.y - gp.center.y) > hw) continue;
        best = std::max(best, matching::ncc(gp.patch, imaging::crop(probe, {x0, y0, w, h})).value);
      }
    total += best;
  }
  return total / static_cast<double>(gallery.size());
}

Outcome matching_oracles(Transcript& tr) {
  Outcome o;
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> pos(0.3, 0.7), u(0, 1);
  int fmm_bad = 0, self_bad = 0, empty_bad = 0;
  for (int t = 0; t < 2000; ++t) {
    marks::MarkSet g, p;
    const int n = 1 + static_cast<int>(rng() % 5), m = static_cast<int>(rng() % 6);
    auto mark = [&] {
      marks::FacialMark f;
      f.center = {pos(rng), pos(rng)};
      f.intensity_hist = random_hist<marks::kIntensityBins>(rng);
      f.orient_hist = random_hist<marks::kOrientationBins>(rng);
      return f;
    };
    for (int i = 0; i < n; ++i) g.marks.push_back(mark());
    for (int j = 0; j < m; ++j) p.marks.push_back(mark());
    matching::MatchConfig cfg;
    cfg.region_halfwidth = 0.02 + 0.2 * u(rng);
    const double v = matching::fmm(g, p, cfg).value;
    fmm_bad += std::abs(v - brute_fmm(g, p, cfg.region_halfwidth)) > 1e-9;
    self_bad += matching::fmm(g, g, cfg).value != 0;
    empty_bad += matching::fmm(g, marks::MarkSet{}, cfg).value != 1.0;
    if (t % 200 == 0) tr.add("fmm", v);
  }
  o.expect(fmm_bad == 0, std::to_string(fmm_bad) + " fmm/oracle mismatches");
  o.expect(self_bad == 0, std::to_string(self_bad) + " nonzero fmm(A,A)");
  o.expect(empty_bad == 0, std::to_string(empty_bad) + " empty probes not scored 1");

  int caf_bad = 0;
  const auto mean = synth::default_mean_shape();
  const pipeline::PipelineConfig cfg;
  synth::FaceOptions opt;
  opt.min_marks = 1;
  opt.max_marks = 5;
  for (int t = 0; t < 12; ++t) {
    const auto subject = synth::random_subject(rng, opt);
    const auto a = synth::render_face(subject, synth::random_pose(rng), rng, opt);
    const auto b = synth::render_face(t % 2 ? subject : synth::random_subject(rng, opt), synth::random_pose(rng),
                                      rng, opt);
    const auto fa = pipeline::process_face(a.image, a.landmarks, mean, cfg);
    const auto fb = pipeline::process_face(b.image, b.landmarks, mean, cfg);
    if (fa.marks.marks.empty()) continue;
    const auto patches = matching::gallery_patches(fa.marks, fa.warped, cfg.detector.patch_margin);
    const double v = matching::caf1(patches, fb.warped).value;
    caf_bad += std::abs(v - brute_caf1(patches, fb.warped, 0.05)) > 1e-9;
    tr.add("caf1", v);
  }
  o.expect(caf_bad == 0, std::to_string(caf_bad) + " caf1/oracle mismatches");
  if (o.pass) o.detail = "2000 fmm instances and 12 caf1 face pairs equal their oracles";
  return o;
}

// -- 8 ------------------------------------------------------------------------------

int optimal_tp(const std::vector<imaging::Box>& gt, const std::vector<imaging::Box>& det, double t0) {
  std::vector<int> perm(std::max(gt.size(), det.size()));
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int tp = 0;
    for (size_t d = 0; d < det.size(); ++d)
      if (perm[d] < static_cast<int>(gt.size()) && imaging::iou(det[d], gt[perm[d]]) >= t0) ++tp;
    best = std::max(best, tp);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::string box_text(const imaging::Box& b) {
  return " (" + std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," +
         std::to_string(b.h) + ")";
}

Outcome metric_checks(Transcript& tr) {
  Outcome o;
  std::mt19937_64 rng(808);
  std::normal_distribution<double> n01(0, 1);
  evalkit::ScoreSet same;
  for (int i = 0; i < 10000; ++i) {
    same.genuine.push_back(n01(rng));
    same.impostor.push_back(n01(rng));
  }
  const double eer = evalkit::roc(same).eer;
  tr.add("eer", eer);
  o.expect(std::abs(eer - 0.5) <= 0.02, fmt("EER %.4f", eer));

  const int k = 20;
  std::vector<evalkit::IdentificationTrial> trials;
  std::vector<std::string> ids;
  for (int i = 0; i < k; ++i) ids.push_back("c" + std::to_string(i));
  for (int t = 0; t < 10000; ++t) {
    auto ranked = ids;
    std::shuffle(ranked.begin(), ranked.end(), rng);
    trials.push_back({ids[rng() % k], ranked});
  }
  const double r1 = evalkit::cmc(trials, 1)[0];
  tr.add("arr1", r1);
  o.expect(std::abs(r1 - 1.0 / k) <= 0.02, fmt("ARR rank 1 %.4f", r1));

  std::uniform_int_distribution<int> at(0, 20), size(2, 10);
  const int cases = 20000;
  int divergent = 0, inconsistent = 0;
  for (int c = 0; c < cases; ++c) {
    std::vector<imaging::Box> gt, det;
    const int ng = static_cast<int>(rng() % 5), nd = static_cast<int>(rng() % 5);
    for (int i = 0; i < ng; ++i) gt.push_back({at(rng), at(rng), size(rng), size(rng)});
    for (int i = 0; i < nd; ++i) det.push_back({at(rng), at(rng), size(rng), size(rng)});
    const auto t = evalkit::score_detections(gt, det, 0.4);
    const int opt = optimal_tp(gt, det, 0.4);
    inconsistent += t.tp + t.fn != ng || t.tp + t.fp != nd || t.tp > opt;
    if (t.tp != opt) {
      ++divergent;
      std::string note = "greedy " + std::to_string(t.tp) + " vs optimal " + std::to_string(opt) + ": gt";
      for (const auto& b : gt) note += box_text(b);
      note += " det";
      for (const auto& b : det) note += box_text(b);
      o.notes.push_back(note);
    }
  }
  tr.add("divergent", static_cast<double>(divergent));
  o.expect(inconsistent == 0, std::to_string(inconsistent) + " inconsistent tallies");
  o.expect(divergent < cases * 0.02, std::to_string(divergent) + " greedy/optimal divergences");
  if (o.pass)
    o.detail = fmt("EER %.4f, ARR1 %.4f (1/k = 0.05), ", eer, r1) + std::to_string(divergent) + " of " +
               std::to_string(cases) + " detection cases where greedy matching trails the optimum";
  return o;
}

// -- 9 ------------------------------------------------------------------------------

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Outcome end_to_end(Transcript& tr) {
  Outcome o;
  ScratchDir corpus("accept_corpus"), gallery("accept_gallery");
  const fs::path c = corpus.path(), g = gallery.path();
  const std::vector<std::string> keys{"--sf-key", "0x5ea1ed", "--demographic-key", "acceptance"};
  if (cli_run({"synth", "--out", c.string(), "--subjects", "10", "--samples", "2", "--seed", "909", "--hands"})
          .code != 0) {
    o.expect(false, "synth failed");
    return o;
  }
  std::vector<std::string> ids;
  for (int s = 0; s < 10; ++s) {
    char id[8];
    std::snprintf(id, sizeof id, "s%03d", s);
    ids.push_back(id);
    std::vector<std::string> args{"enroll", "--id", id, "--out", g.string(),
                                  "--image", (c / (ids.back() + "_0.pgm")).string(),
                                  "--landmarks", (c / (ids.back() + "_0.lm")).string(),
                                  "--hand", (c / (ids.back() + "_0.hand.lm")).string(),
                                  "--demographic", (c / (ids.back() + ".demo")).string()};
    args.insert(args.end(), keys.begin(), keys.end());
    const auto r = cli_run(args);
    o.expect(r.code == 0, "enroll " + ids.back() + " failed: " + r.err);
  }
  if (!o.pass) return o;

  auto verify = [&](const std::string& claimed, const std::string& probe) {
    std::vector<std::string> args{"verify", "--symbol", (g / (claimed + ".bio.ppm")).string(),
                                  "--image", (c / (probe + "_1.pgm")).string(),
                                  "--landmarks", (c / (probe + "_1.lm")).string()};
    args.insert(args.end(), keys.begin(), keys.end());
    return cli_run(args);
  };
  double worst_genuine = 1, best_impostor = 0;
  for (const auto& claimed : ids)
    for (const auto& probe : ids) {
      const auto r = verify(claimed, probe);
      const auto at = r.out.find("score=");
      if (at == std::string::npos) {
        o.expect(false, "no score for " + claimed + "/" + probe + ": " + r.err);
        continue;
      }
      const double s = std::stod(r.out.substr(at + 6));
      tr.add("verify", r.out);
      if (claimed == probe)
        worst_genuine = std::min(worst_genuine, s);
      else
        best_impostor = std::max(best_impostor, s);
    }
  o.expect(worst_genuine > best_impostor, fmt("lowest genuine %.4f <= highest impostor %.4f", worst_genuine,
                                               best_impostor));
  for (const auto& f : fs::directory_iterator(g)) {
    if (f.path().extension() != ".ppm" && f.path().extension() != ".pgm") tr.add("file", io::read_file(f.path()));
  }

  int not_unavailable = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    deface_symbol(g / (ids[i] + ".bio.ppm"), static_cast<int>(i));
    const auto r = verify(ids[i], ids[i]);
    not_unavailable += r.code != cli::kExitUnavailable || r.out.find("decision") != std::string::npos;
  }
  o.expect(not_unavailable == 0, std::to_string(not_unavailable) + " corrupted symbols did not exit 3");
  if (o.pass)
    o.detail = fmt("lowest genuine %.4f > highest impostor %.4f; 10/10 corrupted symbols exit 3", worst_genuine,
                   best_impostor);
  return o;
}

// -- 10 -----------------------------------------------------------------------------

Outcome hand_checks(Transcript& tr) {
  using namespace handgeom;
  Outcome o;
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(-200, 200), ang(-std::numbers::pi, std::numbers::pi);
  double worst = 0;
  for (int t = 0; t < 500; ++t) {
    const auto h = from_landmarks(synth::render_hand(synth::random_hand(rng), rng));
    const double a = ang(rng), tx = u(rng), ty = u(rng);
    auto move = [&](geometry::Point p) {
      return geometry::Point{std::cos(a) * p.x - std::sin(a) * p.y + tx, std::sin(a) * p.x + std::cos(a) * p.y + ty};
    };
    auto m = h;
    for (auto& p : m.tip) p = move(p);
    for (auto& p : m.base) p = move(p);
    for (auto& p : m.valley) p = move(p);
    m.wrist_left = move(m.wrist_left);
    m.wrist_right = move(m.wrist_right);
    const auto f = hand_features(h), f2 = hand_features(m);
    for (int i = 0; i < kFeatureCount; ++i) worst = std::max(worst, std::abs(f[i] - f2[i]));
  }
  o.expect(worst <= 1e-6, fmt("rigid motion changed a feature by %.3g", worst));

  std::map<std::string, std::vector<HandFeatureVector>> groups;
  for (auto [id, vals] : {std::pair{"a", std::array{10.0, 12.0}}, std::pair{"b", std::array{18.0, 22.0}}})
    for (double v : vals) {
      HandFeatureVector f{};
      f[0] = v;
      groups[id].push_back(f);
    }
  const double q = feature_quality(groups, 0);
  o.expect(std::abs(q - 31.0 / 3.0) <= 1e-6, fmt("quality %.9f, expected 10.333333", q));

  std::vector<Sample> samples;
  std::vector<synth::HandSubject> subjects;
  for (int s = 0; s < 10; ++s) subjects.push_back(synth::random_hand(rng));
  // Subject-major order, so the i-th fold holds the i-th sample of each subject.
  for (int s = 0; s < 10; ++s)
    for (int k = 0; k < 10; ++k)
      samples.push_back({"h" + std::to_string(s), hand_features(from_landmarks(synth::render_hand(subjects[s], rng)))});
  const double acc = cross_validate(samples, 10);
  tr.add("hand", acc);
  o.expect(acc == 1.0, fmt("10-fold accuracy %.4f", acc));
  if (o.pass) o.detail = fmt("invariance error %.2g, quality %.6f, 10-fold accuracy %.2f", worst, q, acc);
  return o;
}

struct PassResult {
  std::vector<std::pair<Outcome, double>> outcomes;
  std::vector<std::string> digests;
};

PassResult run_pass(const std::vector<Check>& checks) {
  PassResult r;
  for (const auto& c : checks) {
    Transcript tr;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(tr);
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) o.expect(false, fmt("took %.1f s, limit %.0f s", secs, c.limit_s));
    r.outcomes.emplace_back(o, secs);
    r.digests.push_back(tr.digest());
  }
  return r;
}

}  // namespace

int main() {
  const std::vector<Check> checks{
      {1, "crypto round trips", 30, crypto_round_trips},
      {2, "SF diffusion", 0, sf_diffusion},
      {3, "key share scheme", 0, share_scheme},
      {4, "codec", 60, codec_checks},
      {5, "geometry", 0, geometry_checks},
      {6, "mark detection", 120, detection_checks},
      {7, "matching oracles", 0, matching_oracles},
      {8, "metrics", 0, metric_checks},
      {9, "end to end", 0, end_to_end},
      {10, "hand geometry", 0, hand_checks},
  };
  const auto first = run_pass(checks);
  const auto second = run_pass(checks);

  int failed = 0;
  for (size_t i = 0; i < checks.size(); ++i) {
    const auto& [o, secs] = first.outcomes[i];
    failed += !o.pass;
    std::printf("%s %2d %-20s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", checks[i].id, checks[i].name.c_str(), secs,
                o.detail.c_str());
    for (const auto& n : o.notes) std::printf("        %s\n", n.c_str());
  }
  int differing = 0;
  bool second_pass_ok = true;
  for (size_t i = 0; i < checks.size(); ++i) {
    differing += first.digests[i] != second.digests[i];
    second_pass_ok = second_pass_ok && second.outcomes[i].first.pass;
  }
  const bool det_ok = differing == 0 && second_pass_ok;
  std::string all;
  for (const auto& d : first.digests) all += d;
  const auto combined = io::to_hex(crypto::sha256(std::span(reinterpret_cast<const std::uint8_t*>(all.data()), all.size())));
  failed += !det_ok;
  std::printf("%s %2d %-20s %6s   %s\n", det_ok ? "PASS" : "FAIL", 11, "determinism", "",
              det_ok ? ("two passes agree, transcript sha256 " + combined.substr(0, 16)).c_str()
                     : (std::to_string(differing) + " checks produced different outputs on the second pass").c_str());
  std::printf("%d of 11 acceptance checks passed\n", 11 - failed);
  return failed == 0 ? 0 : 1;
}
