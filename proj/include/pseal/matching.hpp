#pragma once

// Histogram and patch similarity kernels, the facial-mark matching scores
// and score-level fusion with an external face matcher.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseal/imaging.hpp"
#include "pseal/marks.hpp"

namespace pseal::matching {

/// Hellinger form of the Bhattacharyya distance, sqrt(1 - BC), in [0,1].
/// Throws kBinMismatch or kNotNormalized (sum off by more than 1e-6).
double bhattacharyya(std::span<const double> h1, std::span<const double> h2);

inline constexpr int kNccSize = 16;

struct NccResult {
  double value = 0;
  bool zero_variance = false;
};

/// Zero-mean NCC after resampling both patches to 16x16, clamped below at 0.
NccResult ncc(const imaging::GrayImage& a, const imaging::GrayImage& b);

enum class Descriptor { kIntensity, kOrientation };

enum class ScoreKind { kFmmDistance, kCaf1Similarity, kCaf2Distance, kFusedSimilarity };

std::string_view kind_name(ScoreKind kind);
ScoreKind parse_kind(std::string_view name);
bool is_distance(ScoreKind kind);

struct MatchPair {
  int gallery = 0;
  std::optional<int> probe;
  bool operator==(const MatchPair&) const = default;
};

struct MatchScore {
  double value = 0;
  ScoreKind kind = ScoreKind::kFmmDistance;
  std::vector<MatchPair> matched_pairs;
};

/// Mark similarity in [0,1]: 1 - value for distance kinds.
double similarity(const MatchScore& score);

struct MatchConfig {
  double region_halfwidth = 0.05;
  Descriptor descriptor = Descriptor::kIntensity;
  double missing_penalty = 1.0;
};

/// True when `probe_center` lies in the rectangle of `gallery_center`.
bool in_region(const geometry::Point& gallery_center, const geometry::Point& probe_center, double halfwidth);

/// Mean over gallery marks of the smallest descriptor distance to an
/// in-region probe mark (penalty when none). The orientation descriptor
/// yields kCaf2Distance. Throws kEmptyGallery.
MatchScore fmm(const marks::MarkSet& gallery, const marks::MarkSet& probe, const MatchConfig& cfg = {});
MatchScore caf2(const marks::MarkSet& gallery, const marks::MarkSet& probe, const MatchConfig& cfg = {});

struct GalleryPatch {
  geometry::Point center;  // normalized, mean frame
  imaging::GrayImage patch;
};

std::vector<GalleryPatch> gallery_patches(const marks::MarkSet& set, const imaging::GrayImage& warped,
                                          int margin = 1);

/// Best NCC of `patch` over every same-size window of `probe` whose center
/// lies in the region of `center`; out-of-bounds windows are skipped.
double best_window_ncc(const GalleryPatch& patch, const imaging::GrayImage& probe, double halfwidth);

/// Mean of best_window_ncc over the gallery. Throws kEmptyGallery.
MatchScore caf1(std::span<const GalleryPatch> gallery, const imaging::GrayImage& probe, const MatchConfig& cfg = {});

struct FusionWeights {
  double w_fr = 0.9;
  double w_fmm = 0.1;
};

/// Throws kWeightSum unless both weights are >= 0 and sum to 1 within 1e-9.
void validate(const FusionWeights& w);

/// w_fr * face + w_fmm * similarity(mark). Throws kWeightSum or kBadConfig
/// (face score outside [0,1]).
MatchScore fuse(double face_score, const MatchScore& mark, const FusionWeights& w);

// -- score dumps: `gallery_id probe_id kind value` ---------------------------------

struct ScoreRecord {
  std::string gallery_id;
  std::string probe_id;
  ScoreKind kind = ScoreKind::kFmmDistance;
  double value = 0;
  bool operator==(const ScoreRecord&) const = default;
};

std::string format_scores(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> parse_scores(std::string_view text);

}  // namespace pseal::matching
