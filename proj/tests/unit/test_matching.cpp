#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pseal/error.hpp"
#include "pseal/matching.hpp"
#include "pseal/synth.hpp"

using namespace pseal;
using namespace pseal::matching;
using marks::FacialMark;
using marks::MarkSet;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

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

FacialMark random_mark(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.3, 0.7);
  FacialMark m;
  m.center = {pos(rng), pos(rng)};
  m.intensity_hist = random_hist<marks::kIntensityBins>(rng);
  m.orient_hist = random_hist<marks::kOrientationBins>(rng);
  return m;
}

double hellinger(const double* a, const double* b, size_t n) {
  double bc = 0;
  for (size_t i = 0; i < n; ++i) bc += std::sqrt(a[i] * b[i]);
  return std::sqrt(std::max(0.0, 1.0 - bc));
}

// All-pairs distance matrix, then row minima restricted to the region.
double brute_fmm(const MarkSet& g, const MarkSet& p, double hw, bool orient) {
  const size_t n = g.marks.size(), m = p.marks.size();
  std::vector<double> d(n * m), inside(n * m);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < m; ++j) {
      const auto& a = g.marks[i];
      const auto& b = p.marks[j];
      d[i * m + j] = orient ? hellinger(a.orient_hist.data(), b.orient_hist.data(), a.orient_hist.size())
                            : hellinger(a.intensity_hist.data(), b.intensity_hist.data(), a.intensity_hist.size());
      inside[i * m + j] = std::abs(a.center.x - b.center.x) <= hw && std::abs(a.center.y - b.center.y) <= hw;
    }
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

imaging::GrayImage random_patch(std::mt19937_64& rng, int w, int h) {
  imaging::GrayImage img(w, h);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

double direct_ncc(const imaging::GrayImage& a, const imaging::GrayImage& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) ma += a.data()[i] / n, mb += b.data()[i] / n;
  double num = 0, da = 0, db = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a.data()[i] - ma) * (b.data()[i] - mb);
    da += (a.data()[i] - ma) * (a.data()[i] - ma);
    db += (b.data()[i] - mb) * (b.data()[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("bhattacharyya") {
  const std::vector<double> a{1, 0}, b{0.5, 0.5}, c{0, 1};
  CHECK(bhattacharyya(a, a) == 0);
  CHECK(bhattacharyya(a, c) == 1);
  CHECK(bhattacharyya(a, b) == doctest::Approx(0.5411961001).epsilon(1e-9));
  CHECK(bhattacharyya(a, b) == bhattacharyya(b, a));
  CHECK(code_of([&] { bhattacharyya(a, std::vector<double>{1, 0, 0}); }) == ErrorCode::kBinMismatch);
  CHECK(code_of([&] { bhattacharyya(a, std::vector<double>{0.5, 0.4}); }) == ErrorCode::kNotNormalized);
  CHECK_NOTHROW(bhattacharyya(a, std::vector<double>{0.5, 0.5 + 5e-7}));
}

TEST_CASE("ncc") {
  std::mt19937_64 rng(3);
  const auto p = random_patch(rng, 16, 16);
  CHECK(ncc(p, p).value == doctest::Approx(1.0));
  imaging::GrayImage neg = p;
  for (auto& v : neg.data()) v = 1 - v;
  CHECK(ncc(p, neg).value == 0);

  imaging::GrayImage flat(16, 16, 0.5);
  const auto r = ncc(p, flat);
  CHECK(r.zero_variance);
  CHECK(r.value == 0);

  int small = 0;
  for (int t = 0; t < 200; ++t) {
    const auto a = random_patch(rng, 16, 16), b = random_patch(rng, 16, 16);
    const double oracle = std::max(0.0, direct_ncc(a, b));
    CHECK(std::abs(ncc(a, b).value - oracle) <= 1e-9);
    small += std::abs(direct_ncc(a, b)) < 0.5;
  }
  CHECK(small == 200);
}

TEST_CASE("fmm worked example") {
  // Distances 0.2 and 0.4 from 2-bin mixtures: d = sqrt(1 - sqrt(p)).
  auto hist = [](double p) {
    marks::IntensityHist h{};
    h[0] = p;
    h[1] = 1 - p;
    return h;
  };
  MarkSet g, p;
  for (int i = 0; i < 3; ++i) {
    FacialMark m;
    m.center = {0.2 + 0.3 * i, 0.5};
    m.intensity_hist = hist(1.0);
    g.marks.push_back(m);
  }
  FacialMark q0 = g.marks[0], q1 = g.marks[1];
  q0.intensity_hist = hist(0.96 * 0.96);
  q1.intensity_hist = hist(0.84 * 0.84);
  q1.center.x += 0.03;
  p.marks = {q1, q0};
  const auto s = fmm(g, p);
  CHECK(s.kind == ScoreKind::kFmmDistance);
  CHECK(s.value == doctest::Approx((0.2 + 0.4 + 1.0) / 3).epsilon(1e-9));
  REQUIRE(s.matched_pairs.size() == 3);
  CHECK(s.matched_pairs[0] == MatchPair{0, 1});
  CHECK(s.matched_pairs[1] == MatchPair{1, 0});
  CHECK(s.matched_pairs[2] == MatchPair{2, std::nullopt});
}

TEST_CASE("fmm equals the all-pairs oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    MarkSet g, p;
    const int n = 1 + static_cast<int>(rng() % 5), m = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) g.marks.push_back(random_mark(rng));
    for (int j = 0; j < m; ++j) p.marks.push_back(random_mark(rng));
    MatchConfig cfg;
    cfg.region_halfwidth = 0.02 + 0.2 * std::uniform_real_distribution<double>(0, 1)(rng);
    CHECK(std::abs(fmm(g, p, cfg).value - brute_fmm(g, p, cfg.region_halfwidth, false)) <= 1e-9);
    const auto c2 = caf2(g, p, cfg);
    CHECK(c2.kind == ScoreKind::kCaf2Distance);
    CHECK(std::abs(c2.value - brute_fmm(g, p, cfg.region_halfwidth, true)) <= 1e-9);

    CHECK(fmm(g, g, cfg).value <= 1e-12);
    CHECK(fmm(g, MarkSet{}, cfg).value == 1.0);

    // Adding a probe mark never raises the score.
    MarkSet more = p;
    more.marks.push_back(random_mark(rng));
    CHECK(fmm(g, more, cfg).value <= fmm(g, p, cfg).value + 1e-15);
  }
  CHECK(code_of([] { fmm(MarkSet{}, MarkSet{}); }) == ErrorCode::kEmptyGallery);
}

TEST_CASE("caf1") {
  std::mt19937_64 rng(5);
  synth::FaceSubject subject;
  subject.marks = {{{90, 120}, 3, 0.4}, {{160, 150}, 2.5, 0.35}};
  const auto face = synth::render_face(subject, synth::Pose{}, rng);
  const auto& img = face.image;

  MarkSet set;
  for (const auto& box : face.truth) set.marks.push_back(marks::describe_mark(img, box, box.w * box.h));
  const auto patches = gallery_patches(set, img);
  CHECK(caf1(patches, img).value >= 0.99);

  imaging::GrayImage flat(img.width(), img.height(), 0.6);
  CHECK(caf1(patches, flat).value == 0);

  // Shift the probe by 2 px and compare to a scan of every window in the image.
  imaging::GrayImage shifted(img.width(), img.height(), 0.6);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 2; x < img.width(); ++x) shifted.at(x, y) = img.at(x - 2, y);
  for (const auto& gp : patches) {
    const int w = gp.patch.width(), h = gp.patch.height();
    double oracle = 0;
    for (int y0 = 0; y0 + h <= shifted.height(); ++y0) {
      for (int x0 = 0; x0 + w <= shifted.width(); ++x0) {
        const geometry::Point c{(x0 + w / 2.0) / shifted.width(), (y0 + h / 2.0) / shifted.height()};
        if (std::abs(c.x - gp.center.x) > 0.05 || std::abs(c.y - gp.center.y) > 0.05) continue;
        oracle = std::max(oracle, ncc(gp.patch, imaging::crop(shifted, {x0, y0, w, h})).value);
      }
    }
    CHECK(best_window_ncc(gp, shifted, 0.05) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(oracle >= 0.99);
  }
  CHECK(code_of([&] { caf1({}, img); }) == ErrorCode::kEmptyGallery);
}

TEST_CASE("fusion") {
  MatchScore d{0.4, ScoreKind::kFmmDistance, {}};
  CHECK(fuse(0.8, d, {0.9, 0.1}).value == doctest::Approx(0.78).epsilon(1e-12));
  CHECK(fuse(0.8, d, {1.0, 0.0}).value == doctest::Approx(0.8));
  MatchScore c{0.37, ScoreKind::kCaf1Similarity, {}};
  for (double w : {0.0, 0.2, 0.5, 0.9, 1.0}) CHECK(fuse(0.37, c, {w, 1 - w}).value == doctest::Approx(0.37));
  CHECK(code_of([&] { fuse(0.5, d, {0.9, 0.2}); }) == ErrorCode::kWeightSum);
  CHECK(code_of([&] { fuse(0.5, d, {1.1, -0.1}); }) == ErrorCode::kWeightSum);
  CHECK(code_of([&] { fuse(1.5, d, {0.9, 0.1}); }) == ErrorCode::kBadConfig);

  // With w_fmm = 0 the ranking of candidates follows the face scores under any
  // increasing affine map that keeps them in [0,1].
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> faces(6);
    for (auto& f : faces) f = u(rng);
    auto argmax = [&](double a, double b) {
      int best = 0;
      double bv = -1;
      for (int i = 0; i < 6; ++i) {
        const double v = fuse(a * faces[i] + b, MatchScore{u(rng), ScoreKind::kFmmDistance, {}}, {1, 0}).value;
        if (v > bv) bv = v, best = i;
      }
      return best;
    };
    CHECK(argmax(1, 0) == argmax(0.5, 0.25));
  }
}

TEST_CASE("score dump round trip") {
  std::vector<ScoreRecord> recs{{"g1", "p1", ScoreKind::kFmmDistance, 0.125},
                                {"g1", "p2", ScoreKind::kCaf1Similarity, 1.0 / 3},
                                {"g2", "p1", ScoreKind::kFusedSimilarity, 0.78}};
  const auto text = format_scores(recs);
  CHECK(text.substr(0, 22) == "g1 p1 fmm_distance 0.1");
  CHECK(parse_scores(text) == recs);
  CHECK(code_of([] { parse_scores("a b fmm_distance\n"); }) == ErrorCode::kInvalidField);
  CHECK(code_of([] { parse_scores("a b nope 1\n"); }) == ErrorCode::kBadConfig);
}
