#pragma once

// Facial mark detection in the warped, masked face plus the per-mark
// descriptors and size statistics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseal/geometry.hpp"
#include "pseal/imaging.hpp"

namespace pseal::marks {

using imaging::Box;

enum class Category : std::uint8_t {
  kMole,
  kFreckle,
  kBirthmark,
  kPockmark,
  kScar,
  kWhitening,
  kDarkSpot,
  kAcne,
  kPapule,
  kNodule,
  kPustule,
  kAgeSpot,
  kHyperpigmentation,
  kOther,
};

std::string_view category_name(Category c);
Category parse_category(std::string_view name);

inline constexpr int kIntensityBins = 32;
inline constexpr int kOrientationBins = 8;
using IntensityHist = std::array<double, kIntensityBins>;
using OrientationHist = std::array<double, kOrientationBins>;

struct FacialMark {
  Box bbox;                     // pixels, mean-shape frame
  geometry::Point center;       // bbox center / frame dims, in (0,1)
  int area = 0;                 // pixel count of the segmented mark
  Category category = Category::kOther;
  IntensityHist intensity_hist{};
  OrientationHist orient_hist{};
  bool operator==(const FacialMark&) const = default;
};

struct SizeStats {
  double mean = 0, median = 0, std = 0;
  bool operator==(const SizeStats&) const = default;
};

struct MarkSet {
  std::vector<FacialMark> marks;
  std::optional<SizeStats> stats;
  geometry::Frame frame = geometry::kMeanFrame;
  bool operator==(const MarkSet&) const = default;
};

/// How the descending threshold list is derived from the masked |LoG| response.
enum class ThresholdMode {
  kMaxFraction,  // t_l = level_l * max response
  kQuantile,     // t_l = level_l quantile of the masked response
  kAbsolute,     // t_l = level_l
};

struct DetectorConfig {
  double sigma = 1.4142135623730951;
  ThresholdMode mode = ThresholdMode::kMaxFraction;
  std::vector<double> levels{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2};
  int component_trigger = 10;  // C_c
  int min_size = 3;
  double region_halfwidth = 0.05;
  /// A mark's extent is the connected set of pixels whose contrast against the
  /// local background reaches this fraction of the mark's peak contrast.
  double extent_level = 0.5;
  /// Peak contrast against the local background below which a candidate is noise.
  double min_contrast = 0.05;
  int patch_margin = 1;
};

/// Throws kBadConfig when an invariant is violated.
void validate(const DetectorConfig& cfg);

/// Signed LoG of the mask-interior luminance (zero outside the mask). The
/// Gaussian stage is normalized by the smoothed mask so pixels outside the
/// region never contribute. Positive values mark dark blobs.
imaging::Field mark_response(const imaging::GrayImage& warped, const geometry::Mask& mask, double sigma);

/// Strictly decreasing thresholds for `response` over the mask.
std::vector<double> threshold_levels(const imaging::Field& response, const geometry::Mask& mask,
                                     const DetectorConfig& cfg);

imaging::BinaryMap binarize(const imaging::Field& response, double threshold);

MarkSet detect_marks(const imaging::GrayImage& warped, const geometry::Mask& mask, const DetectorConfig& cfg = {});

IntensityHist intensity_histogram(const imaging::GrayImage& patch);
OrientationHist orientation_histogram(const imaging::GrayImage& patch);

/// Descriptors for a mark occupying `bbox` in `warped`.
FacialMark describe_mark(const imaging::GrayImage& warped, const Box& bbox, int area, int patch_margin = 1);

/// The descriptor patch: bbox grown by `margin` and clipped to the image.
imaging::GrayImage mark_patch(const imaging::GrayImage& warped, const Box& bbox, int margin = 1);

SizeStats mark_size_stats(std::span<const FacialMark> marks);
SizeStats mark_size_stats(const MarkSet& set);
MarkSet make_mark_set(std::vector<FacialMark> marks, geometry::Frame frame);

// -- ground truth / override files: `x y w h category` per line ---------------

struct AnnotatedBox {
  Box bbox;
  Category category = Category::kOther;
};

std::vector<AnnotatedBox> parse_mark_file(std::string_view text);
std::vector<AnnotatedBox> load_mark_file(const std::filesystem::path& path);
std::string format_mark_file(std::span<const AnnotatedBox> boxes);
/// Mark lines followed by a `#stats mean median std` trailer when stats exist.
std::string format_mark_set(const MarkSet& set);

/// Copies the category of every override box overlapping a mark with IoU >= 0.5.
void apply_category_overrides(MarkSet& set, std::span<const AnnotatedBox> overrides);

}  // namespace pseal::marks
