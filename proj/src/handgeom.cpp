#include "pseal/handgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pseal/error.hpp"

namespace pseal::handgeom {

namespace {

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }
Point mid(const Point& a, const Point& b) { return {(a.x + b.x) / 2, (a.y + b.y) / 2}; }

struct Moments {
  double mean = 0, std = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

}  // namespace

HandLandmarks from_landmarks(const geometry::LandmarkSet& lm) {
  if (lm.schema != geometry::Schema::kHand16 || lm.points.size() != 16)
    fail(ErrorCode::kSchemaMismatch, "hand features need a Hand16 landmark set");
  HandLandmarks h;
  for (int i = 0; i < 5; ++i) h.tip[i] = lm.points[i];
  for (int i = 0; i < 5; ++i) h.base[i] = lm.points[5 + i];
  for (int i = 0; i < 4; ++i) h.valley[i] = lm.points[10 + i];
  h.wrist_left = lm.points[14];
  h.wrist_right = lm.points[15];
  if (h.wrist_left == h.wrist_right) fail(ErrorCode::kBadLandmarkFile, "wrist points coincide");
  return h;
}

HandFeatureVector hand_features(const HandLandmarks& lm) {
  HandFeatureVector f{};
  const Point wrist_mid = mid(lm.wrist_left, lm.wrist_right);
  for (int i = 0; i < 5; ++i) f[i] = dist(lm.tip[i], lm.base[i]);
  for (int i = 0; i < 4; ++i) f[5 + i] = dist(lm.base[i], lm.base[i + 1]);
  f[9] = dist(lm.wrist_left, lm.wrist_right);
  f[10] = dist(wrist_mid, lm.base[2]);
  f[11] = dist(lm.valley[0], lm.valley[3]);
  f[12] = dist(lm.tip[2], wrist_mid);
  f[13] = dist(lm.tip[0], lm.tip[4]);
  return f;
}

double feature_quality(const std::map<std::string, std::vector<HandFeatureVector>>& subjects, int feature) {
  if (subjects.empty()) fail(ErrorCode::kEmptyGallery, "no subjects");
  double mean_sum = 0, std_sum = 0;
  for (const auto& [id, vectors] : subjects) {
    if (vectors.empty()) fail(ErrorCode::kEmptyGallery, "subject " + id + " has no samples");
    std::vector<double> v;
    for (const auto& f : vectors) v.push_back(f[feature]);
    const Moments m = moments(v);
    mean_sum += m.mean;
    std_sum += m.std;
  }
  const double n = static_cast<double>(subjects.size());
  const double q = (mean_sum / n) / (kQualityEpsilon + std_sum / n);
  return std::min(q, kQualityCap);
}

HandGallery::HandGallery(std::map<std::string, std::vector<HandFeatureVector>> subjects)
    : subjects_(std::move(subjects)) {
  for (int i = 0; i < kFeatureCount; ++i) {
    std::vector<double> all;
    for (const auto& [id, vectors] : subjects_) {
      if (vectors.empty()) fail(ErrorCode::kEmptyGallery, "subject " + id + " has no samples");
      for (const auto& f : vectors) all.push_back(f[i]);
    }
    const Moments m = moments(all);
    mean_[i] = m.mean;
    std_[i] = m.std;
    quality_[i] = subjects_.empty() ? 0.0 : feature_quality(subjects_, i);
  }
}

HandGallery HandGallery::with_enrolled(const std::string& subject, const HandFeatureVector& f) const {
  auto copy = subjects_;
  copy[subject].push_back(f);
  return HandGallery(std::move(copy));
}

HandMatch classify_hand(const HandFeatureVector& probe, const HandGallery& gallery, double tau) {
  return classify_hand(probe, gallery, tau, gallery.quality());
}

HandMatch classify_hand(const HandFeatureVector& probe, const HandGallery& gallery, double tau,
                        const HandFeatureVector& weights) {
  if (gallery.empty()) fail(ErrorCode::kEmptyGallery, "hand gallery is empty");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  HandFeatureVector w{};
  for (int i = 0; i < kFeatureCount; ++i) w[i] = total > 0 ? weights[i] / total : 1.0 / kFeatureCount;

  // A feature with zero spread carries no identity information; leave it
  // unscaled rather than dividing by zero.
  auto z = [&](const HandFeatureVector& f, int i) {
    const double s = gallery.stddev()[i];
    return s > 0 ? (f[i] - gallery.mean()[i]) / s : 0.0;
  };

  HandMatch best;
  double best_d2 = std::numeric_limits<double>::infinity();
  // std::map iterates in lexicographic order, so a strict comparison keeps
  // the smallest id on ties.
  for (const auto& [id, vectors] : gallery.subjects()) {
    for (const auto& g : vectors) {
      double d2 = 0;
      for (int i = 0; i < kFeatureCount; ++i) {
        const double d = z(probe, i) - z(g, i);
        d2 += w[i] * d * d;
      }
      if (d2 < best_d2) {
        best_d2 = d2;
        best.subject = id;
      }
    }
  }
  best.distance = std::sqrt(best_d2);
  best.accepted = best.distance <= tau;
  return best;
}

double cross_validate(const std::vector<Sample>& samples, int folds) {
  if (folds < 2 || samples.size() < static_cast<size_t>(folds))
    fail(ErrorCode::kInsufficientData, "need at least one sample per fold");
  size_t correct = 0, tested = 0;
  for (int k = 0; k < folds; ++k) {
    std::map<std::string, std::vector<HandFeatureVector>> train;
    for (size_t i = 0; i < samples.size(); ++i)
      if (static_cast<int>(i % folds) != k) train[samples[i].subject].push_back(samples[i].features);
    const HandGallery gallery(std::move(train));
    for (size_t i = k; i < samples.size(); i += folds) {
      ++tested;
      if (classify_hand(samples[i].features, gallery, std::numeric_limits<double>::infinity()).subject ==
          samples[i].subject)
        ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(tested);
}

}  // namespace pseal::handgeom
