#include "pseal/matching.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pseal/error.hpp"

namespace pseal::matching {

namespace {

void check_unit_sum(std::span<const double> h) {
  double s = 0;
  for (double v : h) {
    if (v < 0) fail(ErrorCode::kNotNormalized, "negative histogram bin");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-6) fail(ErrorCode::kNotNormalized, "histogram sums to " + std::to_string(s));
}

// Stored templates quantize bins, so renormalize before comparing.
template <size_t N>
std::array<double, N> renormalized(const std::array<double, N>& h) {
  const double s = std::accumulate(h.begin(), h.end(), 0.0);
  std::array<double, N> out{};
  if (s <= 0) {
    out.fill(1.0 / N);
    return out;
  }
  for (size_t i = 0; i < N; ++i) out[i] = h[i] / s;
  return out;
}

double descriptor_distance(const marks::FacialMark& a, const marks::FacialMark& b, Descriptor d) {
  if (d == Descriptor::kIntensity) {
    const auto ha = renormalized(a.intensity_hist), hb = renormalized(b.intensity_hist);
    return bhattacharyya(ha, hb);
  }
  const auto ha = renormalized(a.orient_hist), hb = renormalized(b.orient_hist);
  return bhattacharyya(ha, hb);
}

constexpr std::array<std::string_view, 4> kKindNames{"fmm_distance", "caf1_similarity", "caf2_distance",
                                                      "fused_similarity"};

NccResult ncc_resampled(const imaging::GrayImage& a, const imaging::GrayImage& b) {
  const size_t n = a.size();
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += a.data()[i];
    mb += b.data()[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a.data()[i] - ma, db = b.data()[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 1e-18 || sbb <= 1e-18) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), 0.0, 1.0), false};
}

}  // namespace

double bhattacharyya(std::span<const double> h1, std::span<const double> h2) {
  if (h1.size() != h2.size() || h1.empty()) fail(ErrorCode::kBinMismatch, "histograms differ in bin count");
  check_unit_sum(h1);
  check_unit_sum(h2);
  // For unit-sum inputs 1 - BC = sum((sqrt a - sqrt b)^2) / 2; this form is
  // exactly zero for identical histograms, where sqrt(1 - BC) would return
  // rounding noise of order 1e-8.
  double d2 = 0;
  for (size_t i = 0; i < h1.size(); ++i) {
    const double d = std::sqrt(h1[i]) - std::sqrt(h2[i]);
    d2 += d * d;
  }
  return std::sqrt(std::clamp(d2 / 2, 0.0, 1.0));
}

NccResult ncc(const imaging::GrayImage& a, const imaging::GrayImage& b) {
  if (a.empty() || b.empty()) fail(ErrorCode::kEmptyPatch, "ncc of an empty patch");
  return ncc_resampled(imaging::resample(a, kNccSize, kNccSize), imaging::resample(b, kNccSize, kNccSize));
}

std::string_view kind_name(ScoreKind kind) { return kKindNames[static_cast<int>(kind)]; }

ScoreKind parse_kind(std::string_view name) {
  for (size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<ScoreKind>(i);
  fail(ErrorCode::kBadConfig, "unknown score kind '" + std::string(name) + "'");
}

bool is_distance(ScoreKind kind) { return kind == ScoreKind::kFmmDistance || kind == ScoreKind::kCaf2Distance; }

double similarity(const MatchScore& score) { return is_distance(score.kind) ? 1.0 - score.value : score.value; }

bool in_region(const geometry::Point& gallery_center, const geometry::Point& probe_center, double halfwidth) {
  return std::abs(probe_center.x - gallery_center.x) <= halfwidth &&
         std::abs(probe_center.y - gallery_center.y) <= halfwidth;
}

MatchScore fmm(const marks::MarkSet& gallery, const marks::MarkSet& probe, const MatchConfig& cfg) {
  if (gallery.marks.empty()) fail(ErrorCode::kEmptyGallery, "gallery has no marks");
  if (!(cfg.region_halfwidth > 0)) fail(ErrorCode::kBadConfig, "region halfwidth must be positive");
  MatchScore score;
  score.kind = cfg.descriptor == Descriptor::kIntensity ? ScoreKind::kFmmDistance : ScoreKind::kCaf2Distance;
  double sum = 0;
  for (size_t i = 0; i < gallery.marks.size(); ++i) {
    const auto& g = gallery.marks[i];
    double best = cfg.missing_penalty;
    std::optional<int> arg;
    for (size_t j = 0; j < probe.marks.size(); ++j) {
      if (!in_region(g.center, probe.marks[j].center, cfg.region_halfwidth)) continue;
      const double d = descriptor_distance(g, probe.marks[j], cfg.descriptor);
      if (!arg || d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    sum += best;
    score.matched_pairs.push_back({static_cast<int>(i), arg});
  }
  score.value = std::clamp(sum / static_cast<double>(gallery.marks.size()), 0.0, 1.0);
  return score;
}

MatchScore caf2(const marks::MarkSet& gallery, const marks::MarkSet& probe, const MatchConfig& cfg) {
  MatchConfig c = cfg;
  c.descriptor = Descriptor::kOrientation;
  return fmm(gallery, probe, c);
}

std::vector<GalleryPatch> gallery_patches(const marks::MarkSet& set, const imaging::GrayImage& warped, int margin) {
  std::vector<GalleryPatch> out;
  for (const auto& m : set.marks) out.push_back({m.center, marks::mark_patch(warped, m.bbox, margin)});
  return out;
}

double best_window_ncc(const GalleryPatch& patch, const imaging::GrayImage& probe, double halfwidth) {
  const int w = patch.patch.width(), h = patch.patch.height();
  if (w == 0 || h == 0) fail(ErrorCode::kEmptyPatch, "gallery patch is empty");
  const double W = probe.width(), H = probe.height();
  const imaging::GrayImage ref = imaging::resample(patch.patch, kNccSize, kNccSize);
  double best = 0;
  // Window centers follow the mark convention: (x0 + w/2) / W.
  const int x_lo = std::max(0, static_cast<int>(std::floor((patch.center.x - halfwidth) * W - w / 2.0)));
  const int x_hi = std::min(probe.width() - w, static_cast<int>(std::ceil((patch.center.x + halfwidth) * W - w / 2.0)));
  const int y_lo = std::max(0, static_cast<int>(std::floor((patch.center.y - halfwidth) * H - h / 2.0)));
  const int y_hi =
      std::min(probe.height() - h, static_cast<int>(std::ceil((patch.center.y + halfwidth) * H - h / 2.0)));
  for (int y0 = y_lo; y0 <= y_hi; ++y0) {
    for (int x0 = x_lo; x0 <= x_hi; ++x0) {
      const geometry::Point c{(x0 + w / 2.0) / W, (y0 + h / 2.0) / H};
      if (!in_region(patch.center, c, halfwidth)) continue;
      const auto window = imaging::crop(probe, {x0, y0, w, h});
      const auto r = ncc_resampled(ref, imaging::resample(window, kNccSize, kNccSize));
      best = std::max(best, r.value);
    }
  }
  return best;
}

MatchScore caf1(std::span<const GalleryPatch> gallery, const imaging::GrayImage& probe, const MatchConfig& cfg) {
  if (gallery.empty()) fail(ErrorCode::kEmptyGallery, "gallery has no marks");
  MatchScore score;
  score.kind = ScoreKind::kCaf1Similarity;
  double sum = 0;
  for (size_t i = 0; i < gallery.size(); ++i) {
    sum += best_window_ncc(gallery[i], probe, cfg.region_halfwidth);
    score.matched_pairs.push_back({static_cast<int>(i), std::nullopt});
  }
  score.value = sum / static_cast<double>(gallery.size());
  return score;
}

void validate(const FusionWeights& w) {
  if (w.w_fr < 0 || w.w_fmm < 0 || std::abs(w.w_fr + w.w_fmm - 1.0) > 1e-9)
    fail(ErrorCode::kWeightSum, "fusion weights must be nonnegative and sum to 1");
}

MatchScore fuse(double face_score, const MatchScore& mark, const FusionWeights& w) {
  validate(w);
  if (!(face_score >= 0 && face_score <= 1)) fail(ErrorCode::kBadConfig, "face score outside [0,1]");
  MatchScore out;
  out.kind = ScoreKind::kFusedSimilarity;
  out.value = std::clamp(w.w_fr * face_score + w.w_fmm * similarity(mark), 0.0, 1.0);
  out.matched_pairs = mark.matched_pairs;
  return out;
}

std::string format_scores(std::span<const ScoreRecord> records) {
  std::string out;
  char buf[64];
  for (const auto& r : records) {
    const auto end = std::to_chars(buf, buf + sizeof buf, r.value).ptr;
    out += r.gallery_id + ' ' + r.probe_id + ' ' + std::string(kind_name(r.kind)) + ' ' + std::string(buf, end) + '\n';
  }
  return out;
}

std::vector<ScoreRecord> parse_scores(std::string_view text) {
  std::vector<ScoreRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ScoreRecord r;
    std::string kind, value;
    if (!(ls >> r.gallery_id >> r.probe_id >> kind >> value))
      fail(ErrorCode::kInvalidField, "score line " + std::to_string(line_no) + " needs four fields");
    r.kind = parse_kind(kind);
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), r.value);
    if (ec != std::errc{} || p != value.data() + value.size())
      fail(ErrorCode::kInvalidField, "score line " + std::to_string(line_no) + ": bad value");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pseal::matching
