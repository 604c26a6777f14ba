#include "pseal/marks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pseal/io.hpp"

namespace pseal::marks {

using imaging::BinaryMap;
using imaging::Field;
using imaging::GrayImage;

namespace {

constexpr std::array<std::string_view, 14> kCategoryNames{
    "mole", "freckle", "birthmark", "pockmark", "scar",   "whitening",     "dark_spot",
    "acne", "papule",  "nodule",    "pustule",  "age_spot", "hyperpigmentation", "other"};

}  // namespace

std::string_view category_name(Category c) { return kCategoryNames.at(static_cast<size_t>(c)); }

Category parse_category(std::string_view name) {
  for (size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  fail(ErrorCode::kInvalidField, "unknown mark category '" + std::string(name) + "'");
}

void validate(const DetectorConfig& cfg) {
  if (!(cfg.sigma > 0)) fail(ErrorCode::kBadConfig, "sigma must be positive");
  if (cfg.levels.empty()) fail(ErrorCode::kBadConfig, "threshold list is empty");
  for (size_t i = 1; i < cfg.levels.size(); ++i)
    if (!(cfg.levels[i] < cfg.levels[i - 1])) fail(ErrorCode::kBadConfig, "thresholds must strictly decrease");
  if (cfg.component_trigger < 1) fail(ErrorCode::kBadConfig, "C_c must be >= 1");
  if (cfg.min_size < 1) fail(ErrorCode::kBadConfig, "min_size must be >= 1");
  if (!(cfg.region_halfwidth > 0)) fail(ErrorCode::kBadConfig, "region halfwidth must be positive");
  if (cfg.min_contrast < 0) fail(ErrorCode::kBadConfig, "minimum contrast must be nonnegative");
  if (!(cfg.extent_level > 0 && cfg.extent_level <= 1)) fail(ErrorCode::kBadConfig, "extent level must be in (0,1]");
}

Field mark_response(const GrayImage& warped, const geometry::Mask& mask, double sigma) {
  if (!mask.inside.same_shape(warped)) fail(ErrorCode::kDimensionMismatch, "mask and warped image differ in size");
  // Normalized convolution: smooth only mask-interior luminance so the region
  // boundary (and the zero fill outside the warp) never enters the response.
  Field masked(warped.width(), warped.height()), weight(warped.width(), warped.height());
  for (size_t i = 0; i < warped.size(); ++i) {
    weight.data()[i] = mask.inside.data()[i];
    masked.data()[i] = mask.inside.data()[i] ? warped.data()[i] : 0.0;
  }
  const Field num = imaging::gaussian_filter(masked, sigma);
  const Field den = imaging::gaussian_filter(weight, sigma);
  Field smooth(warped.width(), warped.height());
  for (size_t i = 0; i < smooth.size(); ++i)
    smooth.data()[i] = den.data()[i] > 1e-6 ? num.data()[i] / den.data()[i] : 0.0;
  Field r = imaging::laplacian(smooth, &mask.inside);
  for (size_t i = 0; i < r.size(); ++i) r.data()[i] = mask.inside.data()[i] ? r.data()[i] : 0.0;
  return r;
}

std::vector<double> threshold_levels(const Field& response, const geometry::Mask& mask, const DetectorConfig& cfg) {
  std::vector<double> values;
  for (size_t i = 0; i < response.size(); ++i)
    if (mask.inside.data()[i]) values.push_back(response.data()[i]);
  std::vector<double> t;
  if (values.empty()) return t;
  std::sort(values.begin(), values.end());
  for (double level : cfg.levels) {
    double v = level;
    if (cfg.mode == ThresholdMode::kMaxFraction) {
      v = level * values.back();
    } else if (cfg.mode == ThresholdMode::kQuantile) {
      const double pos = std::clamp(level, 0.0, 1.0) * (values.size() - 1);
      const size_t lo = static_cast<size_t>(std::floor(pos));
      const size_t hi = std::min(values.size() - 1, lo + 1);
      v = values[lo] + (values[hi] - values[lo]) * (pos - lo);
    }
    if (v > 0 && (t.empty() || v < t.back())) t.push_back(v);
  }
  return t;
}

BinaryMap binarize(const Field& response, double threshold) {
  BinaryMap out(response.width(), response.height());
  for (size_t i = 0; i < response.size(); ++i) out.data()[i] = response.data()[i] > 0 && response.data()[i] >= threshold;
  return out;
}

IntensityHist intensity_histogram(const GrayImage& patch) {
  if (patch.empty()) fail(ErrorCode::kEmptyPatch, "histogram of an empty patch");
  IntensityHist h{};
  for (double v : patch.data()) h[std::min(kIntensityBins - 1, static_cast<int>(std::clamp(v, 0.0, 1.0) * kIntensityBins))] += 1;
  for (double& b : h) b /= static_cast<double>(patch.size());
  return h;
}

OrientationHist orientation_histogram(const GrayImage& patch) {
  const GrayImage block = imaging::resample(patch, 8, 8);
  const auto g = imaging::gradient(block);
  OrientationHist h{};
  double total = 0;
  constexpr double kBinWidth = std::numbers::pi / kOrientationBins;
  for (size_t i = 0; i < block.size(); ++i) {
    const double m = g.magnitude.data()[i];
    if (m <= 1e-12) continue;
    double angle = std::atan2(g.fy.data()[i], g.fx.data()[i]);
    if (angle < 0) angle += std::numbers::pi;
    int bin = static_cast<int>(angle / kBinWidth);
    if (bin >= kOrientationBins) bin = 0;  // angle == pi folds onto 0
    h[bin] += m;
    total += m;
  }
  if (total <= 0) {
    h.fill(1.0 / kOrientationBins);
    return h;
  }
  for (double& b : h) b /= total;
  return h;
}

GrayImage mark_patch(const GrayImage& warped, const Box& bbox, int margin) {
  return imaging::crop(warped, {bbox.x - margin, bbox.y - margin, bbox.w + 2 * margin, bbox.h + 2 * margin});
}

FacialMark describe_mark(const GrayImage& warped, const Box& bbox, int area, int patch_margin) {
  FacialMark m;
  m.bbox = bbox;
  m.area = area;
  m.center = {(bbox.x + bbox.w / 2.0) / warped.width(), (bbox.y + bbox.h / 2.0) / warped.height()};
  const GrayImage patch = mark_patch(warped, bbox, patch_margin);
  m.intensity_hist = intensity_histogram(patch);
  m.orient_hist = orientation_histogram(patch);
  return m;
}

SizeStats mark_size_stats(std::span<const FacialMark> marks) {
  if (marks.empty()) fail(ErrorCode::kEmptySet, "size statistics of an empty mark set");
  std::vector<double> a;
  for (const auto& m : marks) a.push_back(m.area);
  std::sort(a.begin(), a.end());
  SizeStats s;
  for (double v : a) s.mean += v;
  s.mean /= a.size();
  s.median = a[(a.size() - 1) / 2];
  double var = 0;
  for (double v : a) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / a.size());
  return s;
}

SizeStats mark_size_stats(const MarkSet& set) { return mark_size_stats(set.marks); }

MarkSet make_mark_set(std::vector<FacialMark> marks, geometry::Frame frame) {
  MarkSet set;
  set.marks = std::move(marks);
  set.frame = frame;
  if (!set.marks.empty()) set.stats = mark_size_stats(set.marks);
  return set;
}

MarkSet detect_marks(const GrayImage& warped, const geometry::Mask& mask, const DetectorConfig& cfg) {
  validate(cfg);
  const Field signed_log = mark_response(warped, mask, cfg.sigma);
  Field response = signed_log;
  for (double& v : response.data()) v = std::abs(v);
  const geometry::Frame frame{warped.width(), warped.height()};

  // Descend through the thresholds until enough segments appear.
  imaging::ComponentSet cc;
  for (double t : threshold_levels(response, mask, cfg)) {
    cc = imaging::connected_components(binarize(response, t));
    if (static_cast<int>(cc.components.size()) >= cfg.component_trigger) break;
  }

  std::vector<FacialMark> found;
  BinaryMap claimed(warped.width(), warped.height());
  const int pad = static_cast<int>(std::ceil(3 * cfg.sigma));
  std::vector<std::pair<int, int>> stack;
  for (const auto& comp : cc.components) {
    const int x0 = std::max(0, comp.bbox.x - pad), y0 = std::max(0, comp.bbox.y - pad);
    const int x1 = std::min(warped.width() - 1, comp.bbox.x + comp.bbox.w - 1 + pad);
    const int y1 = std::min(warped.height() - 1, comp.bbox.y + comp.bbox.h - 1 + pad);

    // Polarity from the signed response at the component's strongest pixel:
    // positive LoG marks a dark blob, negative a bright one.
    double best = -1, polarity = 1;
    for (int y = comp.bbox.y; y < comp.bbox.y + comp.bbox.h; ++y)
      for (int x = comp.bbox.x; x < comp.bbox.x + comp.bbox.w; ++x)
        if (cc.labels.at(x, y) == comp.id && response.at(x, y) > best) {
          best = response.at(x, y);
          polarity = signed_log.at(x, y) >= 0 ? 1.0 : -1.0;
        }

    std::vector<double> border;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if ((x == x0 || x == x1 || y == y0 || y == y1) && mask.inside.at(x, y)) border.push_back(warped.at(x, y));
    if (border.empty()) continue;
    std::nth_element(border.begin(), border.begin() + border.size() / 2, border.end());
    const double background = border[border.size() / 2];
    auto contrast = [&](int x, int y) { return polarity * (background - warped.at(x, y)); };

    int sx = -1, sy = -1;
    double peak = 0;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (mask.inside.at(x, y) && contrast(x, y) > peak) {
          peak = contrast(x, y);
          sx = x, sy = y;
        }
    if (sx < 0 || peak < cfg.min_contrast || claimed.at(sx, sy)) continue;

    const double level = cfg.extent_level * peak;
    int area = 0, bx0 = sx, bx1 = sx, by0 = sy, by1 = sy;
    claimed.at(sx, sy) = 1;
    stack.assign(1, {sx, sy});
    while (!stack.empty()) {
      auto [cx, cy] = stack.back();
      stack.pop_back();
      ++area;
      bx0 = std::min(bx0, cx), bx1 = std::max(bx1, cx), by0 = std::min(by0, cy), by1 = std::max(by1, cy);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = cx + dx, ny = cy + dy;
          if (nx < x0 || nx > x1 || ny < y0 || ny > y1 || claimed.at(nx, ny) || !mask.inside.at(nx, ny)) continue;
          if (contrast(nx, ny) >= level) {
            claimed.at(nx, ny) = 1;
            stack.emplace_back(nx, ny);
          }
        }
    }
    const Box box{bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1};
    // A blurred 2x2 speck can spread over a 3x3 box at half contrast while
    // covering only ~5 pixels; the extent must also fill a min_size square.
    if (box.w < cfg.min_size || box.h < cfg.min_size || area < cfg.min_size * cfg.min_size) continue;
    found.push_back(describe_mark(warped, box, area, cfg.patch_margin));
  }
  return make_mark_set(std::move(found), frame);
}

// -- files ---------------------------------------------------------------------

std::vector<AnnotatedBox> parse_mark_file(std::string_view text) {
  std::vector<AnnotatedBox> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    AnnotatedBox b;
    std::string cat = "other";
    if (!(ls >> b.bbox.x >> b.bbox.y >> b.bbox.w >> b.bbox.h)) fail(ErrorCode::kInvalidField, "bad mark line: " + line);
    ls >> cat;
    b.category = parse_category(cat);
    if (b.bbox.w <= 0 || b.bbox.h <= 0) fail(ErrorCode::kZeroAreaBox, "mark box with zero area: " + line);
    out.push_back(b);
  }
  return out;
}

std::vector<AnnotatedBox> load_mark_file(const std::filesystem::path& path) {
  return parse_mark_file(io::read_text(path));
}

std::string format_mark_file(std::span<const AnnotatedBox> boxes) {
  std::ostringstream os;
  for (const auto& b : boxes)
    os << b.bbox.x << ' ' << b.bbox.y << ' ' << b.bbox.w << ' ' << b.bbox.h << ' ' << category_name(b.category) << '\n';
  return os.str();
}

std::string format_mark_set(const MarkSet& set) {
  std::vector<AnnotatedBox> boxes;
  for (const auto& m : set.marks) boxes.push_back({m.bbox, m.category});
  std::string out = format_mark_file(boxes);
  if (set.stats) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "#stats %.6f %.6f %.6f\n", set.stats->mean, set.stats->median, set.stats->std);
    out += buf;
  }
  return out;
}

void apply_category_overrides(MarkSet& set, std::span<const AnnotatedBox> overrides) {
  for (auto& m : set.marks) {
    double best = 0.5;
    for (const auto& o : overrides) {
      const double v = imaging::iou(m.bbox, o.bbox);
      if (v >= best) {
        best = v;
        m.category = o.category;
      }
    }
  }
}

}  // namespace pseal::marks
