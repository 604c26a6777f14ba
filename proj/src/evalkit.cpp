#include "pseal/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "pseal/error.hpp"

namespace pseal::evalkit {

namespace {

void check_area(const Box& b) {
  if (b.w <= 0 || b.h <= 0) fail(ErrorCode::kZeroAreaBox, "box with zero area");
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double DetectionTally::precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp); }
double DetectionTally::recall() const { return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn); }

DetectionTally& DetectionTally::operator+=(const DetectionTally& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

DetectionTally score_detections(std::span<const Box> gt, std::span<const Box> det, double t0) {
  for (const auto& b : gt) check_area(b);
  for (const auto& b : det) check_area(b);
  DetectionTally t;
  t.t0 = t0;
  std::vector<bool> taken(gt.size(), false);
  for (const auto& d : det) {
    int best = -1;
    double best_iou = -1;
    for (size_t g = 0; g < gt.size(); ++g) {
      if (taken[g]) continue;
      const double v = imaging::iou(d, gt[g]);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= t0) {
      taken[best] = true;
      ++t.tp;
    } else {
      ++t.fp;
    }
  }
  t.fn = static_cast<int>(gt.size()) - t.tp;
  return t;
}

RocSummary roc(const ScoreSet& scores, std::span<const double> far_targets) {
  if (scores.genuine.empty() || scores.impostor.empty())
    fail(ErrorCode::kEmptyScores, "need genuine and impostor scores");
  std::vector<double> gen = scores.genuine, imp = scores.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds;
  thresholds.reserve(gen.size() + imp.size() + 2);
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  thresholds.insert(thresholds.end(), gen.begin(), gen.end());
  thresholds.insert(thresholds.end(), imp.begin(), imp.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  RocSummary out;
  const double ng = static_cast<double>(gen.size()), ni = static_cast<double>(imp.size());
  for (double t : thresholds) {
    const auto imp_below = std::lower_bound(imp.begin(), imp.end(), t) - imp.begin();
    const auto gen_below = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
    out.points.push_back({t, (ni - static_cast<double>(imp_below)) / ni, static_cast<double>(gen_below) / ng});
  }

  // FAR - FRR falls from 1 to -1 across the sweep; interpolate at the crossing.
  const auto& p = out.points;
  for (size_t i = 0; i < p.size(); ++i) {
    const double d = p[i].far - p[i].frr;
    if (d == 0) {
      out.eer = p[i].far;
      break;
    }
    if (i + 1 < p.size() && d > 0 && p[i + 1].far - p[i + 1].frr < 0) {
      const double d1 = p[i + 1].far - p[i + 1].frr;
      const double t = d / (d - d1);
      out.eer = p[i].far + t * (p[i + 1].far - p[i].far);
      break;
    }
  }

  for (double target : far_targets) {
    double frr = p.front().frr;
    for (size_t i = 0; i + 1 < p.size(); ++i) {
      if (p[i].far > target && p[i + 1].far <= target) {
        const double t = (p[i].far - target) / (p[i].far - p[i + 1].far);
        frr = p[i].frr + t * (p[i + 1].frr - p[i].frr);
        break;
      }
    }
    out.frr_at_far.emplace_back(target, frr);
  }
  return out;
}

std::vector<double> cmc(std::span<const IdentificationTrial> trials, int max_rank) {
  if (trials.empty()) fail(ErrorCode::kEmptyScores, "no identification trials");
  if (max_rank < 1) fail(ErrorCode::kBadConfig, "max rank must be positive");
  std::vector<double> hits(max_rank, 0.0);
  for (const auto& t : trials) {
    std::set<std::string> seen;
    for (const auto& id : t.ranked)
      if (!seen.insert(id).second) fail(ErrorCode::kDuplicateCandidate, "candidate '" + id + "' listed twice");
    const auto it = std::find(t.ranked.begin(), t.ranked.end(), t.true_id);
    if (it == t.ranked.end()) continue;
    for (auto r = it - t.ranked.begin(); r < max_rank; ++r) hits[r] += 1;
  }
  for (double& h : hits) h /= static_cast<double>(trials.size());
  return hits;
}

std::vector<matching::FusionWeights> default_weight_grid() {
  std::vector<matching::FusionWeights> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back({1.0 - i / 10.0, i / 10.0});
  return grid;
}

std::vector<FusionRow> fusion_sweep(std::span<const FusionTrial> trials,
                                    std::span<const matching::FusionWeights> grid) {
  std::vector<FusionRow> rows;
  for (const auto& w : grid) {
    ScoreSet s;
    for (const auto& t : trials) {
      const double v = matching::fuse(t.face_score, t.mark, w).value;
      (t.genuine ? s.genuine : s.impostor).push_back(v);
    }
    rows.push_back({w.w_fr, w.w_fmm, roc(s, {}).eer});
  }
  return rows;
}

std::string format_report(const Report& r) {
  std::ostringstream os;
  if (!r.title.empty()) os << r.title << '\n';
  if (!r.header.empty()) {
    std::vector<size_t> width(r.header.size(), 0);
    auto widen = [&](const std::vector<std::string>& row) {
      for (size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
    };
    widen(r.header);
    for (const auto& row : r.rows) widen(row);
    auto line = [&](const std::vector<std::string>& row) {
      for (size_t i = 0; i < row.size() && i < width.size(); ++i) {
        os << row[i];
        if (i + 1 < row.size()) os << std::string(width[i] - row[i].size() + 2, ' ');
      }
      os << '\n';
    };
    line(r.header);
    size_t total = 0;
    for (size_t w : width) total += w + 2;
    os << std::string(total - 2, '-') << '\n';
    for (const auto& row : r.rows) line(row);
  }
  os << "# metrics\n";
  for (const auto& [name, value] : r.metrics) os << name << ' ' << number(value) << '\n';
  return os.str();
}

std::string curve_csv(const RocSummary& roc) {
  std::ostringstream os;
  os << "threshold,far,frr\n";
  for (const auto& p : roc.points) {
    const std::string t = std::isinf(p.threshold) ? (p.threshold < 0 ? "-inf" : "inf") : number(p.threshold);
    os << t << ',' << number(p.far) << ',' << number(p.frr) << '\n';
  }
  return os.str();
}

}  // namespace pseal::evalkit
