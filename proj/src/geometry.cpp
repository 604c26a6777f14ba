#include "pseal/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "pseal/io.hpp"

namespace pseal::geometry {

using imaging::BinaryMap;
using imaging::GrayImage;

std::string_view schema_name(Schema s) {
  switch (s) {
    case Schema::kFace90: return "Face90";
    case Schema::kFace110: return "Face110";
    case Schema::kFace120: return "Face120";
    case Schema::kHand16: return "Hand16";
  }
  return "?";
}

Schema parse_schema(std::string_view name) {
  for (Schema s : {Schema::kFace90, Schema::kFace110, Schema::kFace120, Schema::kHand16})
    if (schema_name(s) == name) return s;
  fail(ErrorCode::kBadLandmarkFile, "unknown landmark schema '" + std::string(name) + "'");
}

int schema_point_count(Schema s) {
  switch (s) {
    case Schema::kFace90: return 90;
    case Schema::kFace110: return 110;
    case Schema::kFace120: return 120;
    case Schema::kHand16: return 16;
  }
  return 0;
}

namespace {

std::vector<Point> read_points(std::istream& in, int n) {
  std::vector<Point> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    Point p;
    if (!(in >> p.x >> p.y)) fail(ErrorCode::kBadLandmarkFile, "expected " + std::to_string(n) + " points");
    pts.push_back(p);
  }
  return pts;
}

void write_number(std::ostringstream& os, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  os << std::string_view(buf, r.ptr - buf);
}

}  // namespace

LandmarkSet parse_landmarks(std::string_view text, std::optional<Frame> bounds) {
  std::istringstream in{std::string(text)};
  std::string schema;
  int n = 0;
  if (!(in >> schema >> n)) fail(ErrorCode::kBadLandmarkFile, "missing '<schema> <N>' header");
  LandmarkSet lm;
  lm.schema = parse_schema(schema);
  if (n != schema_point_count(lm.schema))
    fail(ErrorCode::kBadLandmarkFile, "schema " + schema + " requires " +
                                          std::to_string(schema_point_count(lm.schema)) + " points, header says " +
                                          std::to_string(n));
  lm.points = read_points(in, n);
  if (bounds) {
    for (const Point& p : lm.points)
      if (p.x < 0 || p.y < 0 || p.x > bounds->width - 1 || p.y > bounds->height - 1)
        fail(ErrorCode::kBadLandmarkFile, "landmark outside image bounds");
  }
  return lm;
}

LandmarkSet load_landmarks(const std::filesystem::path& path, std::optional<Frame> bounds) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIo, "missing landmark file " + path.string());
  return parse_landmarks(io::read_text(path), bounds);
}

std::string format_landmarks(const LandmarkSet& lm) {
  std::ostringstream os;
  os << schema_name(lm.schema) << ' ' << lm.points.size() << '\n';
  for (const Point& p : lm.points) {
    write_number(os, p.x);
    os << ' ';
    write_number(os, p.y);
    os << '\n';
  }
  return os.str();
}

LandmarkSet AnnotationFileProvider::landmarks(const GrayImage& img) {
  return load_landmarks(path_, Frame{img.width(), img.height()});
}

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

std::vector<Triangle> delaunay(std::span<const Point> input) {
  if (input.size() < 3) return {};
  std::vector<Point> pts(input.begin(), input.end());
  double x0 = pts[0].x, x1 = x0, y0 = pts[0].y, y1 = y0;
  for (const Point& p : pts) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  const double span = std::max({x1 - x0, y1 - y0, 1.0});
  const double cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  const int n = static_cast<int>(pts.size());
  pts.push_back({cx - 40 * span, cy - 30 * span});
  pts.push_back({cx + 40 * span, cy - 30 * span});
  pts.push_back({cx, cy + 40 * span});

  auto orient = [&](Triangle t) {
    if (signed_area(pts[t[0]], pts[t[1]], pts[t[2]]) < 0) std::swap(t[1], t[2]);
    return t;
  };
  // Positive when p lies inside the circumcircle of the positively oriented t.
  auto in_circle = [&](const Triangle& t, const Point& p) {
    const Point& a = pts[t[0]];
    const Point& b = pts[t[1]];
    const Point& c = pts[t[2]];
    const double ax = a.x - p.x, ay = a.y - p.y, bx = b.x - p.x, by = b.y - p.y, cx2 = c.x - p.x,
                 cy2 = c.y - p.y;
    return (ax * ax + ay * ay) * (bx * cy2 - cx2 * by) - (bx * bx + by * by) * (ax * cy2 - cx2 * ay) +
           (cx2 * cx2 + cy2 * cy2) * (ax * by - bx * ay);
  };

  std::vector<Triangle> tris{orient({n, n + 1, n + 2})};
  for (int i = 0; i < n; ++i) {
    bool duplicate = false;
    for (int j = 0; j < i; ++j)
      if (pts[j] == pts[i]) duplicate = true;
    if (duplicate) continue;

    std::vector<Triangle> keep;
    std::map<std::pair<int, int>, int> edges;  // directed edge -> count of undirected uses
    std::vector<std::pair<int, int>> order;
    for (const Triangle& t : tris) {
      if (in_circle(t, pts[i]) > 0) {
        for (int e = 0; e < 3; ++e) {
          const int u = t[e], v = t[(e + 1) % 3];
          const auto key = std::minmax(u, v);
          if (edges[{key.first, key.second}]++ == 0) order.emplace_back(u, v);
        }
      } else {
        keep.push_back(t);
      }
    }
    for (auto [u, v] : order) {
      const auto key = std::minmax(u, v);
      if (edges[{key.first, key.second}] == 1) keep.push_back(orient({u, v, i}));
    }
    tris = std::move(keep);
  }
  std::vector<Triangle> out;
  for (const Triangle& t : tris)
    if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);

  // A finite super-triangle can claim thin triangles along the hull. Close
  // the pockets it leaves, then restore the Delaunay property by flipping.
  std::vector<char> first(n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i && first[i]; ++j)
      if (pts[j] == pts[i]) first[i] = 0;
  auto empty_triangle = [&](int a, int b, int c) {
    for (int k = 0; k < n; ++k) {
      if (k == a || k == b || k == c || !first[k]) continue;
      const Point& p = pts[k];
      if (signed_area(pts[a], pts[b], p) >= 0 && signed_area(pts[b], pts[c], p) >= 0 &&
          signed_area(pts[c], pts[a], p) >= 0)
        return false;
    }
    return true;
  };
  for (bool grew = true; grew && !out.empty();) {
    grew = false;
    std::map<std::pair<int, int>, int> directed;
    for (const Triangle& t : out)
      for (int e = 0; e < 3; ++e) directed[{t[e], t[(e + 1) % 3]}] = 1;
    std::map<int, int> next;
    std::vector<char> used(n, 0);
    for (const auto& [e, _] : directed) {
      used[e.first] = used[e.second] = 1;
      if (!directed.count({e.second, e.first})) next[e.first] = e.second;
    }
    for (const auto& [a, b] : next) {
      const auto it = next.find(b);
      if (it == next.end()) continue;
      const int c = it->second;
      if (c != a && signed_area(pts[a], pts[b], pts[c]) < 0 && empty_triangle(a, c, b)) {
        out.push_back({a, c, b});
        grew = true;
        break;
      }
    }
    for (int k = 0; k < n && !grew; ++k) {
      if (used[k] || !first[k]) continue;
      for (const auto& [a, b] : next)
        if (signed_area(pts[a], pts[b], pts[k]) < 0 && empty_triangle(b, a, k)) {
          out.push_back({b, a, k});
          grew = true;
          break;
        }
    }
  }

  const double eps = 1e-12 * std::pow(span, 4);
  for (bool flipped = true; flipped;) {
    flipped = false;
    std::map<std::pair<int, int>, std::pair<size_t, int>> owner;  // directed edge -> (triangle, opposite vertex)
    for (size_t t = 0; t < out.size(); ++t)
      for (int e = 0; e < 3; ++e) owner[{out[t][e], out[t][(e + 1) % 3]}] = {t, out[t][(e + 2) % 3]};
    for (const auto& [edge, left] : owner) {
      const auto right = owner.find({edge.second, edge.first});
      if (right == owner.end()) continue;
      const auto [ti, w] = left;
      const auto [tj, x] = right->second;
      if (in_circle(out[ti], pts[x]) > eps) {
        out[ti] = orient({edge.first, x, w});
        out[tj] = orient({x, edge.second, w});
        flipped = true;
        break;
      }
    }
  }
  for (Triangle& t : out) std::rotate(t.begin(), std::min_element(t.begin(), t.end()), t.end());
  std::sort(out.begin(), out.end());
  return out;
}

MeanShape mean_shape(std::span<const LandmarkSet> shapes, Frame frame) {
  if (shapes.empty()) fail(ErrorCode::kEmptyInput, "mean shape needs at least one landmark set");
  MeanShape mean;
  mean.schema = shapes[0].schema;
  mean.frame = frame;
  mean.points.assign(shapes[0].points.size(), Point{});
  for (const LandmarkSet& s : shapes) {
    if (s.schema != mean.schema || s.points.size() != mean.points.size())
      fail(ErrorCode::kSchemaMismatch, "mean shape inputs use different schemas");
  }
  // Accumulate in a fixed order per point so the result does not depend on
  // floating-point summation order across permutations of the input.
  for (size_t i = 0; i < mean.points.size(); ++i) {
    std::vector<double> xs, ys;
    for (const LandmarkSet& s : shapes) {
      xs.push_back(s.points[i].x);
      ys.push_back(s.points[i].y);
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double sx = 0, sy = 0;
    for (double v : xs) sx += v;
    for (double v : ys) sy += v;
    mean.points[i] = {sx / shapes.size(), sy / shapes.size()};
  }
  mean.triangles = delaunay(mean.points);
  mean.n_sources = static_cast<int>(shapes.size());
  return mean;
}

std::string format_mean_shape(const MeanShape& mean) {
  LandmarkSet lm{mean.schema, mean.points, LandmarkSource::kAnnotationFile};
  std::ostringstream os;
  os << format_landmarks(lm);
  os << "frame " << mean.frame.width << ' ' << mean.frame.height << '\n';
  os << "sources " << mean.n_sources << '\n';
  os << "triangles " << mean.triangles.size() << '\n';
  for (const Triangle& t : mean.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  return os.str();
}

MeanShape parse_mean_shape(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string schema;
  int n = 0;
  if (!(in >> schema >> n)) fail(ErrorCode::kBadLandmarkFile, "missing '<schema> <N>' header");
  MeanShape mean;
  mean.schema = parse_schema(schema);
  if (n != schema_point_count(mean.schema)) fail(ErrorCode::kBadLandmarkFile, "point count does not match schema");
  mean.points = read_points(in, n);
  std::string key;
  size_t n_tri = 0;
  while (in >> key) {
    if (key == "frame") {
      in >> mean.frame.width >> mean.frame.height;
    } else if (key == "sources") {
      in >> mean.n_sources;
    } else if (key == "triangles") {
      in >> n_tri;
      break;
    } else {
      fail(ErrorCode::kBadLandmarkFile, "unexpected key '" + key + "' in mean shape");
    }
  }
  for (size_t i = 0; i < n_tri; ++i) {
    Triangle t;
    if (!(in >> t[0] >> t[1] >> t[2])) fail(ErrorCode::kBadLandmarkFile, "truncated triangulation");
    for (int v : t)
      if (v < 0 || v >= n) fail(ErrorCode::kBadLandmarkFile, "triangle index out of range");
    mean.triangles.push_back(t);
  }
  if (mean.triangles.empty()) mean.triangles = delaunay(mean.points);
  return mean;
}

MeanShape load_mean_shape(const std::filesystem::path& path) { return parse_mean_shape(io::read_text(path)); }

Barycentric barycentric_coords(const Point& p, const Point& r1, const Point& r2, const Point& r3, double scale) {
  const double det = (r2.x - r1.x) * (r3.y - r1.y) - (r3.x - r1.x) * (r2.y - r1.y);
  if (std::abs(det) < 1e-12 * scale * scale) fail(ErrorCode::kDegenerateTriangle, "triangle has zero area");
  Barycentric b;
  b.alpha = ((r2.x - p.x) * (r3.y - p.y) - (r3.x - p.x) * (r2.y - p.y)) / det;
  b.beta = ((r3.x - p.x) * (r1.y - p.y) - (r1.x - p.x) * (r3.y - p.y)) / det;
  b.gamma = 1.0 - b.alpha - b.beta;
  return b;
}

Point recombine(const Barycentric& b, const Point& r1, const Point& r2, const Point& r3) {
  return {b.alpha * r1.x + b.beta * r2.x + b.gamma * r3.x, b.alpha * r1.y + b.beta * r2.y + b.gamma * r3.y};
}

PiecewiseAffine::PiecewiseAffine(const MeanShape& mean, const LandmarkSet& source) : mean_(mean), source_(source) {
  if (mean.schema != source.schema || mean.points.size() != source.points.size())
    fail(ErrorCode::kSchemaMismatch, "landmark schema differs from the mean shape");
}

std::optional<Point> PiecewiseAffine::to_source(const Point& p) const {
  for (const Triangle& t : mean_.triangles) {
    const auto b = barycentric_coords(p, mean_.points[t[0]], mean_.points[t[1]], mean_.points[t[2]]);
    if (!b.inside()) continue;
    // Vertices carry their landmark exactly; rounding in the weights would not.
    for (int v : t)
      if (p == mean_.points[v]) return source_.points[v];
    return recombine(b, source_.points[t[0]], source_.points[t[1]], source_.points[t[2]]);
  }
  return std::nullopt;
}

GrayImage warp_to_mean(const GrayImage& img, const LandmarkSet& lm, const MeanShape& mean) {
  PiecewiseAffine check(mean, lm);  // validates the schema pairing
  (void)check;
  GrayImage out(mean.frame.width, mean.frame.height, 0.0);
  BinaryMap done(mean.frame.width, mean.frame.height);
  for (const Triangle& t : mean.triangles) {
    const Point& a = mean.points[t[0]];
    const Point& b = mean.points[t[1]];
    const Point& c = mean.points[t[2]];
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(out.width() - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(out.height() - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (done.at(x, y)) continue;
        const auto bc = barycentric_coords({double(x), double(y)}, a, b, c);
        if (!bc.inside()) continue;
        const Point src = recombine(bc, lm.points[t[0]], lm.points[t[1]], lm.points[t[2]]);
        out.at(x, y) = std::clamp(imaging::sample_bilinear(img, src.x, src.y), 0.0, 1.0);
        done.at(x, y) = 1;
      }
  }
  return out;
}

// -- regions ------------------------------------------------------------------

namespace {

constexpr std::string_view kRegionText = R"(# Facial region landmark ranges, version 1.
# <schema> <region> <first index> <count>; each region is a closed polygon.
Face90 outline 0 36
Face90 brow_left 36 6
Face90 brow_right 42 6
Face90 eye_left 48 8
Face90 eye_right 56 8
Face90 nose 64 10
Face90 mouth 74 16
Face110 outline 0 40
Face110 brow_left 40 8
Face110 brow_right 48 8
Face110 eye_left 56 10
Face110 eye_right 66 10
Face110 nose 76 14
Face110 mouth 90 20
Face120 outline 0 44
Face120 brow_left 44 8
Face120 brow_right 52 8
Face120 eye_left 60 12
Face120 eye_right 72 12
Face120 nose 84 14
Face120 mouth 98 22
)";

}  // namespace

std::string_view builtin_region_text() { return kRegionText; }

std::vector<RegionTable> parse_region_tables(std::string_view text) {
  std::vector<RegionTable> tables;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string schema;
    Region r;
    if (!(ls >> schema >> r.name >> r.first >> r.count)) fail(ErrorCode::kBadConfig, "bad region line: " + line);
    const Schema s = parse_schema(schema);
    if (r.first < 0 || r.count < 3 || r.first + r.count > schema_point_count(s))
      fail(ErrorCode::kBadConfig, "region range out of bounds: " + line);
    auto it = std::find_if(tables.begin(), tables.end(), [&](const RegionTable& t) { return t.schema == s; });
    if (it == tables.end()) {
      tables.push_back(RegionTable{s, {}, {}});
      it = tables.end() - 1;
    }
    if (r.name == "outline")
      it->outline = r;
    else
      it->features.push_back(r);
  }
  return tables;
}

RegionTable region_table(Schema schema) {
  static const std::vector<RegionTable> tables = parse_region_tables(kRegionText);
  for (const RegionTable& t : tables)
    if (t.schema == schema) return t;
  fail(ErrorCode::kSchemaMismatch, "no facial regions for schema " + std::string(schema_name(schema)));
}

size_t Mask::count() const {
  return static_cast<size_t>(std::count(inside.data().begin(), inside.data().end(), 1));
}

BinaryMap fill_polygon(std::span<const Point> polygon, int width, int height) {
  BinaryMap out(width, height);
  const size_t n = polygon.size();
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    xs.clear();
    for (size_t i = 0; i < n; ++i) {
      const Point& p = polygon[i];
      const Point& q = polygon[(i + 1) % n];
      if ((p.y <= y && y < q.y) || (q.y <= y && y < p.y)) xs.push_back(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
    }
    std::sort(xs.begin(), xs.end());
    for (size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int from = std::max(0, static_cast<int>(std::ceil(xs[k])));
      const int to = std::min(width, static_cast<int>(std::ceil(xs[k + 1])));
      for (int x = from; x < to; ++x) out.at(x, y) = 1;
    }
  }
  return out;
}

namespace {

std::vector<Point> region_polygon(const MeanShape& mean, const Region& r) {
  return {mean.points.begin() + r.first, mean.points.begin() + r.first + r.count};
}

}  // namespace

Mask generic_mask(const MeanShape& mean, const MaskConfig& cfg) {
  return generic_mask(mean, region_table(mean.schema), cfg);
}

Mask generic_mask(const MeanShape& mean, const RegionTable& regions, const MaskConfig& cfg) {
  if (regions.schema != mean.schema) fail(ErrorCode::kSchemaMismatch, "region table schema differs from mean shape");
  const int w = mean.frame.width, h = mean.frame.height;
  Mask mask{fill_polygon(region_polygon(mean, regions.outline), w, h), MaskKind::kGeneric};
  for (const Region& r : regions.features) {
    const BinaryMap feature = imaging::dilate(fill_polygon(region_polygon(mean, r), w, h), cfg.feature_dilation);
    for (size_t i = 0; i < feature.size(); ++i)
      if (feature.data()[i]) mask.inside.data()[i] = 0;
  }
  return mask;
}

Mask user_mask(const Mask& generic, const GrayImage& warped, const MaskConfig& cfg) {
  if (!generic.inside.same_shape(warped)) fail(ErrorCode::kDimensionMismatch, "mask and warped image differ in size");
  const auto edges = imaging::canny(warped, cfg.edge_sigma, cfg.edge_low, cfg.edge_high);
  const auto cc = imaging::connected_components(edges);
  BinaryMap structural(edges.width(), edges.height());
  std::vector<char> is_long(cc.components.size() + 1, 0);
  for (const auto& c : cc.components) is_long[c.id] = c.pixel_count > cfg.max_edge_length;
  for (size_t i = 0; i < structural.size(); ++i) structural.data()[i] = is_long[cc.labels.data()[i]];
  const BinaryMap removed = imaging::dilate(structural, cfg.edge_dilation);
  Mask out{generic.inside, MaskKind::kUserSpecific};
  for (size_t i = 0; i < removed.size(); ++i)
    if (removed.data()[i]) out.inside.data()[i] = 0;
  return out;
}

}  // namespace pseal::geometry
