#include "pseal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pseal::synth {

using geometry::MeanShape;
using imaging::Box;
using imaging::GrayImage;

namespace {

struct Ellipse {
  Point c;
  double a, b;
  double contrast;  // darkening applied inside the feature
};

// Outline first, then brows, eyes, nose, mouth: the region table order.
constexpr double kCx = 128, kCy = 134;
const Ellipse kOutline{{kCx, kCy}, 86, 106, 0};
const Ellipse kSkin{{kCx, kCy}, 95, 115, 0};
const std::array<Ellipse, 6> kFeatures{{
    {{100, 92}, 19, 4, 0.30},   // brow_left
    {{156, 92}, 19, 4, 0.30},   // brow_right
    {{100, 112}, 15, 7, 0.30},  // eye_left
    {{156, 112}, 15, 7, 0.30},  // eye_right
    {{128, 146}, 11, 20, 0.05}, // nose
    {{128, 190}, 24, 8, 0.20},  // mouth
}};
constexpr double kBackground = 0.22;

std::vector<Point> ring(const Ellipse& e, int n) {
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    pts.push_back({e.c.x + e.a * std::cos(t), e.c.y + e.b * std::sin(t)});
  }
  return pts;
}

double ellipse_radius(const Ellipse& e, double u, double v) {
  const double dx = (u - e.c.x) / e.a, dy = (v - e.c.y) / e.b;
  return std::sqrt(dx * dx + dy * dy);
}

double scene(const FaceSubject& s, double u, double v) {
  const double r = ellipse_radius(kSkin, u, v);
  if (r >= 1) return kBackground;
  double val = s.skin + 0.1 * std::sqrt(1 - r * r);
  for (const Ellipse& f : kFeatures) {
    const double d = ellipse_radius(f, u, v);
    const double w = std::clamp((1 - d) / 0.4, 0.0, 1.0);
    val -= f.contrast * w * w * (3 - 2 * w);
  }
  for (const PlantedMark& m : s.marks) {
    const double dx = u - m.center.x, dy = v - m.center.y;
    if (dx * dx + dy * dy <= m.radius * m.radius) val -= m.contrast;
  }
  for (const PlantedSpeck& sp : s.specks)
    if (u >= sp.corner.x && u < sp.corner.x + 2 && v >= sp.corner.y && v < sp.corner.y + 2) val -= sp.contrast;
  return std::clamp(val, 0.0, 1.0);
}

Point forward(const Pose& p, const Point& q, Frame frame) {
  const double cx = frame.width / 2.0, cy = frame.height / 2.0;
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double dx = q.x - cx, dy = q.y - cy;
  return {cx + p.tx + p.scale * (c * dx - s * dy), cy + p.ty + p.scale * (s * dx + c * dy)};
}

Point inverse(const Pose& p, const Point& q, Frame frame) {
  const double cx = frame.width / 2.0, cy = frame.height / 2.0;
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double dx = (q.x - cx - p.tx) / p.scale, dy = (q.y - cy - p.ty) / p.scale;
  return {cx + c * dx + s * dy, cy - s * dx + c * dy};
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

LandmarkSet canonical_face(Schema schema) {
  std::array<int, 7> counts{};
  switch (schema) {
    case Schema::kFace90: counts = {36, 6, 6, 8, 8, 10, 16}; break;
    case Schema::kFace110: counts = {40, 8, 8, 10, 10, 14, 20}; break;
    case Schema::kFace120: counts = {44, 8, 8, 12, 12, 14, 22}; break;
    case Schema::kHand16: fail(ErrorCode::kSchemaMismatch, "canonical_face needs a face schema");
  }
  LandmarkSet lm{schema, ring(kOutline, counts[0]), geometry::LandmarkSource::kAnnotationFile};
  for (size_t i = 0; i < kFeatures.size(); ++i) {
    const auto pts = ring(kFeatures[i], counts[i + 1]);
    lm.points.insert(lm.points.end(), pts.begin(), pts.end());
  }
  return lm;
}

MeanShape default_mean_shape(Schema schema) {
  const LandmarkSet lm = canonical_face(schema);
  return geometry::mean_shape(std::span(&lm, 1), geometry::kMeanFrame);
}

Box disk_box(const PlantedMark& m) {
  const int x0 = static_cast<int>(std::ceil(m.center.x - m.radius));
  const int x1 = static_cast<int>(std::floor(m.center.x + m.radius));
  const int y0 = static_cast<int>(std::ceil(m.center.y - m.radius));
  const int y1 = static_cast<int>(std::floor(m.center.y + m.radius));
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

FaceSubject random_subject(std::mt19937_64& rng, const FaceOptions& opt) {
  static const geometry::Mask mask = geometry::generic_mask(default_mean_shape(Schema::kFace90));
  FaceSubject s;
  s.skin = uniform(rng, 0.56, 0.68);
  const int n = std::uniform_int_distribution<int>(opt.min_marks, opt.max_marks)(rng);

  // Rejection-sample positions well inside the mask and apart from each other.
  std::vector<std::pair<Point, double>> taken;
  auto clear = [&](const Point& c, double r) {
    const int reach = static_cast<int>(std::ceil(r)) + 6;
    for (int dy = -reach; dy <= reach; ++dy)
      for (int dx = -reach; dx <= reach; ++dx) {
        const int x = static_cast<int>(std::lround(c.x)) + dx, y = static_cast<int>(std::lround(c.y)) + dy;
        if (!mask.inside.contains(x, y) || !mask.inside.at(x, y)) return false;
      }
    for (const auto& [p, pr] : taken)
      if (std::hypot(p.x - c.x, p.y - c.y) < r + pr + 10) return false;
    return true;
  };
  for (int attempt = 0; attempt < 20000 && static_cast<int>(s.marks.size()) < n; ++attempt) {
    PlantedMark m;
    m.radius = uniform(rng, 2.6, 4.0);
    m.center = {uniform(rng, 45, 211), uniform(rng, 32, 236)};
    const bool bright = uniform(rng, 0, 1) < opt.bright_fraction;
    m.contrast = bright ? -uniform(rng, 0.2, 0.26) : uniform(rng, 0.25, 0.45);
    if (!clear(m.center, m.radius)) continue;
    taken.emplace_back(m.center, m.radius);
    s.marks.push_back(m);
  }
  for (int attempt = 0; attempt < 20000 && static_cast<int>(s.specks.size()) < opt.specks; ++attempt) {
    PlantedSpeck sp{{uniform(rng, 45, 211), uniform(rng, 32, 236)}, uniform(rng, 0.3, 0.45)};
    const Point c{sp.corner.x + 1, sp.corner.y + 1};
    if (!clear(c, 1.5)) continue;
    taken.emplace_back(c, 1.5);
    s.specks.push_back(sp);
  }
  return s;
}

Pose random_pose(std::mt19937_64& rng) {
  return {uniform(rng, 0.94, 1.06), uniform(rng, -4, 4) * std::numbers::pi / 180, uniform(rng, -6, 6),
          uniform(rng, -6, 6)};
}

FaceSample render_face(const FaceSubject& subject, const Pose& pose, std::mt19937_64& rng, const FaceOptions& opt,
                       Frame frame) {
  FaceSample out;
  out.image = GrayImage(frame.width, frame.height);
  constexpr int kSuper = 4;
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      double acc = 0;
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const Point q = inverse(pose, {x - 0.5 + (sx + 0.5) / kSuper, y - 0.5 + (sy + 0.5) / kSuper}, frame);
          acc += scene(subject, q.x, q.y);
        }
      out.image.at(x, y) = acc / (kSuper * kSuper);
    }

  std::normal_distribution<double> jitter(0.0, opt.landmark_jitter);
  out.landmarks = canonical_face(opt.schema);
  for (Point& p : out.landmarks.points) {
    p = forward(pose, p, frame);
    if (opt.landmark_jitter > 0) p = {p.x + jitter(rng), p.y + jitter(rng)};
    p.x = std::clamp(p.x, 0.0, frame.width - 1.0);
    p.y = std::clamp(p.y, 0.0, frame.height - 1.0);
  }
  for (const PlantedMark& m : subject.marks) out.truth.push_back(disk_box(m));
  for (const PlantedSpeck& sp : subject.specks) {
    const int x0 = static_cast<int>(std::ceil(sp.corner.x)), y0 = static_cast<int>(std::ceil(sp.corner.y));
    out.specks.push_back({x0, y0, static_cast<int>(std::ceil(sp.corner.x + 2)) - x0,
                          static_cast<int>(std::ceil(sp.corner.y + 2)) - y0});
  }
  return out;
}

// -- hands ------------------------------------------------------------------------

HandSubject random_hand(std::mt19937_64& rng) {
  HandSubject h;
  const std::array<double, 5> lengths{55, 75, 85, 78, 60};
  const std::array<double, 5> xs{-10, 20, 42, 62, 80};
  const double size = uniform(rng, 0.8, 1.25);
  for (int i = 0; i < 5; ++i) {
    h.finger_length[i] = size * lengths[i] * uniform(rng, 0.9, 1.1);
    h.base_x[i] = size * xs[i] + uniform(rng, -3, 3);
  }
  h.palm_length = size * uniform(rng, 90, 110);
  h.wrist_width = size * uniform(rng, 60, 80);
  return h;
}

LandmarkSet render_hand(const HandSubject& s, std::mt19937_64& rng, double noise) {
  std::vector<Point> local;
  std::array<Point, 5> base;
  for (int i = 0; i < 5; ++i) base[i] = {s.base_x[i], i == 0 ? 45.0 : 0.0};
  // tips
  for (int i = 0; i < 5; ++i) {
    const double spread = (i - 2) * 0.12 + (i == 0 ? -0.5 : 0.0);
    local.push_back({base[i].x + s.finger_length[i] * std::sin(spread), base[i].y - s.finger_length[i] * std::cos(spread)});
  }
  for (int i = 0; i < 5; ++i) local.push_back(base[i]);
  for (int i = 0; i < 4; ++i) local.push_back({(base[i].x + base[i + 1].x) / 2, (base[i].y + base[i + 1].y) / 2 + 6});
  const double mid = (base[1].x + base[4].x) / 2;
  local.push_back({mid - s.wrist_width / 2, s.palm_length});
  local.push_back({mid + s.wrist_width / 2, s.palm_length});

  std::normal_distribution<double> jitter(0.0, noise);
  const double angle = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const double tx = uniform(rng, 200, 300), ty = uniform(rng, 200, 300);
  const double c = std::cos(angle), sn = std::sin(angle);
  LandmarkSet lm{Schema::kHand16, {}, geometry::LandmarkSource::kAnnotationFile};
  for (const Point& p : local) {
    const double x = p.x + (noise > 0 ? jitter(rng) : 0.0), y = p.y + (noise > 0 ? jitter(rng) : 0.0);
    lm.points.push_back({tx + c * x - sn * y, ty + sn * x + c * y});
  }
  return lm;
}

}  // namespace pseal::synth
