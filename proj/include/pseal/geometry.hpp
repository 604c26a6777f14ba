#pragma once

// Landmark sets, the mean shape and its triangulation, barycentric
// piecewise-affine warping into the mean frame, and the region masks.

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseal/imaging.hpp"

namespace pseal::geometry {

struct Point {
  double x = 0, y = 0;
  bool operator==(const Point&) const = default;
};

enum class Schema { kFace90, kFace110, kFace120, kHand16 };

std::string_view schema_name(Schema s);
Schema parse_schema(std::string_view name);
int schema_point_count(Schema s);

enum class LandmarkSource { kAnnotationFile, kExternalProvider };

struct LandmarkSet {
  Schema schema = Schema::kFace90;
  std::vector<Point> points;
  LandmarkSource source = LandmarkSource::kAnnotationFile;
};

struct Frame {
  int width = 256, height = 256;
  bool operator==(const Frame&) const = default;
};

/// The canonical mean frame all faces are warped into.
inline constexpr Frame kMeanFrame{256, 256};

/// Parses the annotation text format: `<schema> <N>` then N lines `<x> <y>`.
/// When `bounds` is given every point must lie inside it.
LandmarkSet parse_landmarks(std::string_view text, std::optional<Frame> bounds = std::nullopt);
LandmarkSet load_landmarks(const std::filesystem::path& path, std::optional<Frame> bounds = std::nullopt);
std::string format_landmarks(const LandmarkSet& lm);

/// Source of landmarks for an image. Fitting models are out of scope; the
/// shipped provider reads annotation files.
class LandmarkProvider {
 public:
  virtual ~LandmarkProvider() = default;
  virtual LandmarkSet landmarks(const imaging::GrayImage& img) = 0;
};

class AnnotationFileProvider final : public LandmarkProvider {
 public:
  explicit AnnotationFileProvider(std::filesystem::path path) : path_(std::move(path)) {}
  LandmarkSet landmarks(const imaging::GrayImage& img) override;

 private:
  std::filesystem::path path_;
};

using Triangle = std::array<int, 3>;

struct MeanShape {
  Schema schema = Schema::kFace90;
  std::vector<Point> points;
  std::vector<Triangle> triangles;
  int n_sources = 0;
  Frame frame = kMeanFrame;
};

/// Bowyer-Watson Delaunay triangulation; triangles are counter-clockwise in
/// image coordinates (positive signed area with y pointing down).
std::vector<Triangle> delaunay(std::span<const Point> points);

double signed_area(const Point& a, const Point& b, const Point& c);

/// Pointwise mean of the shapes plus a Delaunay triangulation of the result.
MeanShape mean_shape(std::span<const LandmarkSet> shapes, Frame frame = kMeanFrame);

std::string format_mean_shape(const MeanShape& mean);
MeanShape parse_mean_shape(std::string_view text);
MeanShape load_mean_shape(const std::filesystem::path& path);

struct Barycentric {
  double alpha = 0, beta = 0, gamma = 0;
  bool inside(double tol = 1e-9) const {
    return alpha >= -tol && beta >= -tol && gamma >= -tol && alpha <= 1 + tol && beta <= 1 + tol &&
           gamma <= 1 + tol;
  }
};

/// p = alpha*r1 + beta*r2 + gamma*r3 with gamma = 1 - alpha - beta.
/// `scale` is the frame scale used for the degeneracy test.
Barycentric barycentric_coords(const Point& p, const Point& r1, const Point& r2, const Point& r3,
                               double scale = 1.0);

Point recombine(const Barycentric& b, const Point& r1, const Point& r2, const Point& r3);

/// Maps mean-frame points into a source landmark configuration, one affine
/// map per mean-shape triangle.
class PiecewiseAffine {
 public:
  PiecewiseAffine(const MeanShape& mean, const LandmarkSet& source);
  /// Source position for a mean-frame point, or nullopt outside every triangle.
  std::optional<Point> to_source(const Point& p) const;

 private:
  const MeanShape& mean_;
  const LandmarkSet& source_;
};

/// Inverse-maps every mean-frame pixel through its triangle and samples the
/// source bilinearly. Pixels outside the triangulation are 0.
imaging::GrayImage warp_to_mean(const imaging::GrayImage& img, const LandmarkSet& lm, const MeanShape& mean);

// -- regions and masks --------------------------------------------------------

struct Region {
  std::string name;
  int first = 0;
  int count = 0;
};

/// Named landmark ranges per schema: "outline" plus the excluded features.
struct RegionTable {
  Schema schema = Schema::kFace90;
  Region outline;
  std::vector<Region> features;
};

/// Built-in table, identical to data/regions_v1.txt.
RegionTable region_table(Schema schema);
std::vector<RegionTable> parse_region_tables(std::string_view text);
std::string_view builtin_region_text();

enum class MaskKind { kGeneric, kUserSpecific };

struct Mask {
  imaging::BinaryMap inside;
  MaskKind kind = MaskKind::kGeneric;
  int width() const { return inside.width(); }
  int height() const { return inside.height(); }
  size_t count() const;
};

/// Scanline even-odd fill of a closed polygon, sampling pixel (x, y) at its
/// integer position.
imaging::BinaryMap fill_polygon(std::span<const Point> polygon, int width, int height);

struct MaskConfig {
  int feature_dilation = 2;
  double edge_sigma = 1.4142135623730951;
  double edge_low = 0.1;
  double edge_high = 0.3;
  int max_edge_length = 40;  // L_max at the 256x256 frame
  int edge_dilation = 1;
};

/// Outline fill minus the dilated feature polygons.
Mask generic_mask(const MeanShape& mean, const MaskConfig& cfg = {});
Mask generic_mask(const MeanShape& mean, const RegionTable& regions, const MaskConfig& cfg = {});

/// Removes long structural edge contours (hairline, beard) from the generic mask.
Mask user_mask(const Mask& generic, const imaging::GrayImage& warped, const MaskConfig& cfg = {});

}  // namespace pseal::geometry
