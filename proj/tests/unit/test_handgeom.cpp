#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "pseal/error.hpp"
#include "pseal/geometry.hpp"
#include "pseal/handgeom.hpp"
#include "pseal/synth.hpp"

using namespace pseal;
using namespace pseal::handgeom;

namespace {

HandLandmarks all_at(Point p) {
  HandLandmarks h;
  h.tip.fill(p);
  h.base.fill(p);
  h.valley.fill(p);
  h.wrist_left = h.wrist_right = p;
  return h;
}

geometry::LandmarkSet to_set(const HandLandmarks& h) {
  geometry::LandmarkSet lm{geometry::Schema::kHand16, {}, geometry::LandmarkSource::kAnnotationFile};
  for (auto& p : h.tip) lm.points.push_back(p);
  for (auto& p : h.base) lm.points.push_back(p);
  for (auto& p : h.valley) lm.points.push_back(p);
  lm.points.push_back(h.wrist_left);
  lm.points.push_back(h.wrist_right);
  return lm;
}

std::vector<Sample> three_subject_set(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sample> out;
  std::vector<synth::HandSubject> subjects;
  for (int s = 0; s < 3; ++s) subjects.push_back(synth::random_hand(rng));
  for (int k = 0; k < 10; ++k)
    for (int s = 0; s < 3; ++s)
      out.push_back({"s" + std::to_string(s), hand_features(from_landmarks(synth::render_hand(subjects[s], rng)))});
  return out;
}

}  // namespace

TEST_CASE("feature definitions") {
  auto h = all_at({7, 7});
  h.wrist_right = {17, 7};
  const auto f = hand_features(h);
  for (int i = 0; i < kFeatureCount; ++i) {
    // Only the wrist width and the two wrist-midpoint distances see the pair.
    if (i == 9) CHECK(f[i] == doctest::Approx(10));
    else if (i == 10 || i == 12) CHECK(f[i] == doctest::Approx(5));
    else CHECK(f[i] == 0);
  }

  auto g = all_at({0, 0});
  g.wrist_right = {1, 0};
  g.base[0] = {3, 4};
  CHECK(hand_features(g)[0] == doctest::Approx(5).epsilon(1e-12));
}

TEST_CASE("features of the shipped sample annotation") {
  const auto lm = geometry::load_landmarks(PSEAL_DATA_DIR "/samples/hand_sample.lm");
  const auto f = hand_features(from_landmarks(lm));
  // Independent numpy evaluation of the same 14 distances.
  const HandFeatureVector oracle{70.7672240518, 72.2495674728, 84.1486779456, 73.3484832836, 38.2099463491,
                                 108.1665382639, 21.8403296678, 21.3775583264, 22.8035085020, 72.0069441096,
                                 214.6887281624, 42.2018956920, 298.5267994670, 146.8604780055};
  for (int i = 0; i < kFeatureCount; ++i) CHECK(f[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
}

TEST_CASE("from_landmarks validation") {
  geometry::LandmarkSet face{geometry::Schema::kFace90, std::vector<Point>(90), {}};
  CHECK_THROWS_AS(from_landmarks(face), Error);
  CHECK_THROWS_AS(from_landmarks(to_set(all_at({1, 1}))), Error);
}

TEST_CASE("features are invariant under rigid motion") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-200, 200), ang(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 200; ++trial) {
    HandLandmarks h;
    auto pick = [&] { return Point{u(rng), u(rng)}; };
    for (auto& p : h.tip) p = pick();
    for (auto& p : h.base) p = pick();
    for (auto& p : h.valley) p = pick();
    h.wrist_left = pick();
    h.wrist_right = pick();
    const double a = ang(rng), tx = u(rng), ty = u(rng);
    auto move = [&](Point p) {
      return Point{std::cos(a) * p.x - std::sin(a) * p.y + tx, std::sin(a) * p.x + std::cos(a) * p.y + ty};
    };
    HandLandmarks m = h;
    for (auto& p : m.tip) p = move(p);
    for (auto& p : m.base) p = move(p);
    for (auto& p : m.valley) p = move(p);
    m.wrist_left = move(m.wrist_left);
    m.wrist_right = move(m.wrist_right);
    const auto f = hand_features(h), g = hand_features(m);
    for (int i = 0; i < kFeatureCount; ++i) {
      CHECK(f[i] >= 0);
      CHECK(std::abs(f[i] - g[i]) <= 1e-6);
    }
  }
}

TEST_CASE("feature quality") {
  auto with = [](std::vector<std::vector<double>> per_subject) {
    std::map<std::string, std::vector<HandFeatureVector>> s;
    int id = 0;
    for (const auto& vals : per_subject) {
      auto& list = s["s" + std::to_string(id++)];
      for (double v : vals) {
        HandFeatureVector f{};
        f[0] = v;
        list.push_back(f);
      }
    }
    return s;
  };
  CHECK(feature_quality(with({{10, 12}, {18, 22}}), 0) == doctest::Approx(15.5 / 1.5).epsilon(1e-9));
  CHECK(std::abs(feature_quality(with({{10, 12}, {18, 22}}), 0) - 10.333333333) < 1e-6);
  // Zero within-subject spread: the epsilon dominates, then the cap applies.
  CHECK(feature_quality(with({{10, 10}, {20, 20}}), 0) == doctest::Approx(15.0 / kQualityEpsilon));
  CHECK(feature_quality(with({{1e4, 1e4}, {2e4, 2e4}}), 0) == kQualityCap);

  // Relabeling subjects leaves the score unchanged.
  auto a = with({{1, 3}, {5, 9, 4}, {2}});
  std::map<std::string, std::vector<HandFeatureVector>> b;
  b["zz"] = a["s0"];
  b["aa"] = a["s1"];
  b["mm"] = a["s2"];
  CHECK(feature_quality(a, 0) == doctest::Approx(feature_quality(b, 0)).epsilon(1e-12));

  // Shifting every subject by the same data changes only the numerator.
  CHECK(feature_quality(with({{1, 3}, {1, 3}}), 0) == doctest::Approx(2.0 / 1.0));
  CHECK(feature_quality(with({{10, 12}, {10, 12}}), 0) == doctest::Approx(11.0 / 1.0));

  CHECK_THROWS_AS(feature_quality({}, 0), Error);
}

TEST_CASE("classify_hand") {
  HandFeatureVector a{}, b{}, mid{};
  for (int i = 0; i < kFeatureCount; ++i) {
    a[i] = 10 + i;
    b[i] = 20 + 2 * i;
    mid[i] = (a[i] + b[i]) / 2;
  }
  HandFeatureVector a2 = a, b2 = b;
  a2[0] += 1;
  b2[0] -= 1;
  const HandGallery g({{"bob", {b, b2}}, {"alice", {a, a2}}});

  const auto exact = classify_hand(b, g, 0.0);
  CHECK(exact.subject == "bob");
  CHECK(exact.distance == doctest::Approx(0));
  CHECK(exact.accepted);

  HandFeatureVector ones{};
  ones.fill(1.0);
  const HandGallery sym({{"zed", {b}}, {"amy", {a}}});
  CHECK(classify_hand(mid, sym, 100, ones).subject == "amy");

  CHECK_THROWS_AS(classify_hand(a, HandGallery{}, 1.0), Error);

  // Scaling all weights uniformly leaves the winner unchanged.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 40), wq(0.01, 5);
  for (int trial = 0; trial < 100; ++trial) {
    HandFeatureVector p{}, w{}, w10{};
    for (int i = 0; i < kFeatureCount; ++i) {
      p[i] = u(rng);
      w[i] = wq(rng);
      w10[i] = 37.5 * w[i];
    }
    const auto r1 = classify_hand(p, g, 1.0, w), r2 = classify_hand(p, g, 1.0, w10);
    CHECK(r1.subject == r2.subject);
    CHECK(r1.distance == doctest::Approx(r2.distance).epsilon(1e-9));
  }
}

TEST_CASE("enrollment builds a new gallery") {
  HandFeatureVector a{};
  a.fill(3);
  const HandGallery g({{"x", {a}}});
  const auto g2 = g.with_enrolled("y", HandFeatureVector{});
  CHECK(g.subjects().size() == 1);
  CHECK(g2.subjects().size() == 2);
}

TEST_CASE("10-fold accuracy on a separated synthetic gallery") {
  const auto samples = three_subject_set(2024);
  CHECK(cross_validate(samples, 10) == 1.0);

  // Exhaustive nearest-neighbour oracle with plain Euclidean distance on the
  // raw features agrees on every held-out sample.
  for (size_t i = 0; i < samples.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::string who;
    for (size_t j = 0; j < samples.size(); ++j) {
      if (j % 10 == i % 10) continue;
      double d = 0;
      for (int k = 0; k < kFeatureCount; ++k) d += std::pow(samples[i].features[k] - samples[j].features[k], 2);
      if (d < best) best = d, who = samples[j].subject;
    }
    CHECK(who == samples[i].subject);
  }
  CHECK_THROWS_AS(cross_validate(samples, 1), Error);
}
