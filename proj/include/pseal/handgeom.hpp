#pragma once

// Hand geometry: 14 distances over the Hand16 landmark layout, per-feature
// quality weights and a weighted nearest-neighbour classifier.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "pseal/geometry.hpp"

namespace pseal::handgeom {

using geometry::Point;

inline constexpr int kFeatureCount = 14;
using HandFeatureVector = std::array<double, kFeatureCount>;

struct HandLandmarks {
  std::array<Point, 5> tip{};
  std::array<Point, 5> base{};
  std::array<Point, 4> valley{};
  Point wrist_left, wrist_right;
};

/// Throws kSchemaMismatch for a non-Hand16 set and kBadLandmarkFile when the
/// wrist points coincide.
HandLandmarks from_landmarks(const geometry::LandmarkSet& lm);

HandFeatureVector hand_features(const HandLandmarks& lm);

inline constexpr double kQualityEpsilon = 1e-9;
inline constexpr double kQualityCap = 1e12;

class HandGallery {
 public:
  HandGallery() = default;
  /// Throws kEmptyGallery when a subject has no vectors.
  explicit HandGallery(std::map<std::string, std::vector<HandFeatureVector>> subjects);

  HandGallery with_enrolled(const std::string& subject, const HandFeatureVector& f) const;

  bool empty() const { return subjects_.empty(); }
  const std::map<std::string, std::vector<HandFeatureVector>>& subjects() const { return subjects_; }
  const HandFeatureVector& mean() const { return mean_; }
  const HandFeatureVector& stddev() const { return std_; }
  const HandFeatureVector& quality() const { return quality_; }

 private:
  std::map<std::string, std::vector<HandFeatureVector>> subjects_;
  HandFeatureVector mean_{}, std_{}, quality_{};
};

/// Ratio of the mean per-subject mean to the mean per-subject population
/// standard deviation, capped at kQualityCap.
double feature_quality(const std::map<std::string, std::vector<HandFeatureVector>>& subjects, int feature);

struct HandMatch {
  std::string subject;
  double distance = 0;
  bool accepted = false;
};

/// Nearest enrolled vector under the quality-weighted z-score distance. Ties
/// go to the lexicographically smallest subject. Throws kEmptyGallery.
HandMatch classify_hand(const HandFeatureVector& probe, const HandGallery& gallery, double tau);

/// Same, with explicit weights (normalized internally).
HandMatch classify_hand(const HandFeatureVector& probe, const HandGallery& gallery, double tau,
                        const HandFeatureVector& weights);

struct Sample {
  std::string subject;
  HandFeatureVector features{};
};

/// k-fold cross-validated identification accuracy; fold of sample i is i % k.
/// Throws kInsufficientData when k < 2 or there are fewer samples than folds.
double cross_validate(const std::vector<Sample>& samples, int folds = 10);

}  // namespace pseal::handgeom
