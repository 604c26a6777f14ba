#pragma once

// Evaluation metrics: detection precision/recall, verification curves,
// identification CMC and fusion-weight sweeps, plus report formatting.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pseal/imaging.hpp"
#include "pseal/matching.hpp"

namespace pseal::evalkit {

using imaging::Box;

inline constexpr double kDefaultIouThreshold = 0.4;

struct DetectionTally {
  int tp = 0, fp = 0, fn = 0;
  double t0 = kDefaultIouThreshold;

  /// 0/0 is defined as 1.
  double precision() const;
  double recall() const;
  DetectionTally& operator+=(const DetectionTally& o);
};

/// Greedy matching: detections in input order each claim the unmatched
/// ground-truth box of highest IoU (lowest index on ties) when IoU >= t0.
/// Throws kZeroAreaBox.
DetectionTally score_detections(std::span<const Box> gt, std::span<const Box> det,
                                double t0 = kDefaultIouThreshold);

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct RocPoint {
  double threshold = 0;
  double far = 0;
  double frr = 0;
};

struct RocSummary {
  std::vector<RocPoint> points;  // ascending threshold, starting at -inf
  double eer = 0;
  std::vector<std::pair<double, double>> frr_at_far;  // (target far, frr)
};

/// Similarity convention: FAR = impostors >= t, FRR = genuines < t. Thresholds
/// are every distinct score plus -inf and +inf. Throws kEmptyScores.
RocSummary roc(const ScoreSet& scores, std::span<const double> far_targets = std::vector<double>{0.001});

struct IdentificationTrial {
  std::string true_id;
  std::vector<std::string> ranked;  // best first
};

/// ARR at ranks 1..max_rank. Throws kDuplicateCandidate or kEmptyScores.
std::vector<double> cmc(std::span<const IdentificationTrial> trials, int max_rank = 10);

struct FusionTrial {
  double face_score = 0;
  matching::MatchScore mark;
  bool genuine = false;
};

struct FusionRow {
  double w_fr = 0, w_fmm = 0, eer = 0;
};

/// w_fmm = 0, 0.1, ..., 1.
std::vector<matching::FusionWeights> default_weight_grid();

std::vector<FusionRow> fusion_sweep(std::span<const FusionTrial> trials,
                                    std::span<const matching::FusionWeights> grid);

// -- reports ------------------------------------------------------------------------

struct Report {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, double>> metrics;
};

/// Aligned text table followed by a `metric value` block.
std::string format_report(const Report& r);
/// `threshold,far,frr` lines with a header row.
std::string curve_csv(const RocSummary& roc);

}  // namespace pseal::evalkit
