#include "pseal/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include "pseal/io.hpp"

namespace pseal::imaging {

GrayImage::GrayImage(int width, int height, double fill) : Grid<double>(width, height, fill) {}

GrayImage GrayImage::from_data(int width, int height, std::vector<double> data) {
  GrayImage img(width, height);
  if (data.size() != img.size()) fail(ErrorCode::kDimensionMismatch, "data length != width*height");
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::kInvalidField, "luminance outside [0,1]");
  }
  img.data_ = std::move(data);
  return img;
}

GrayImage GrayImage::from_field(const Field& field) {
  GrayImage img(field.width(), field.height());
  for (size_t i = 0; i < field.size(); ++i) img.data()[i] = std::clamp(field.data()[i], 0.0, 1.0);
  return img;
}

GrayImage to_gray(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  for (size_t i = 0; i < img.size(); ++i) {
    const Rgb& p = img.data()[i];
    out.data()[i] = std::clamp(0.299 * p.r + 0.587 * p.g + 0.114 * p.b, 0.0, 1.0);
  }
  return out;
}

double iou(const Box& a, const Box& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
  const double inter = (x1 > x0 && y1 > y0) ? double(x1 - x0) * (y1 - y0) : 0.0;
  const double uni = double(a.area()) + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0)) fail(ErrorCode::kBadConfig, "sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Field gaussian_filter(const Field& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Field tmp(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  Field out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

GrayImage gaussian_filter(const GrayImage& img, double sigma) {
  return GrayImage::from_field(gaussian_filter(static_cast<const Field&>(img), sigma));
}

Gradient gradient(const Field& img) {
  if (img.width() < 3 || img.height() < 3) fail(ErrorCode::kImageTooSmall, "gradient needs at least 3x3");
  Gradient g{Field(img.width(), img.height()), Field(img.width(), img.height()),
             Field(img.width(), img.height())};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      auto p = [&](int dx, int dy) { return img.clamped(x + dx, y + dy); };
      const double fx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const double fy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      g.fx.at(x, y) = fx;
      g.fy.at(x, y) = fy;
      g.magnitude.at(x, y) = std::sqrt(fx * fx + fy * fy);
    }
  return g;
}

EdgeMap canny(const GrayImage& img, double sigma, double low, double high) {
  if (low > high) fail(ErrorCode::kThresholdOrder, "low threshold exceeds high threshold");
  const Field smooth = gaussian_filter(static_cast<const Field&>(img), sigma);
  const Gradient g = gradient(smooth);
  const int w = img.width(), h = img.height();

  // Non-maximum suppression along the gradient direction quantized to 45 degrees.
  Field thin(w, h);
  double peak = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = g.magnitude.at(x, y);
      if (m <= 0) continue;
      double angle = std::atan2(g.fy.at(x, y), g.fx.at(x, y)) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      int dx, dy;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1, dy = 0;
      } else if (angle < 67.5) {
        dx = 1, dy = 1;
      } else if (angle < 112.5) {
        dx = 0, dy = 1;
      } else {
        dx = -1, dy = 1;
      }
      const double fwd = g.magnitude.clamped(x + dx, y + dy);
      const double back = g.magnitude.clamped(x - dx, y - dy);
      if (m > back && m >= fwd) {
        thin.at(x, y) = m;
        peak = std::max(peak, m);
      }
    }

  EdgeMap edges(w, h);
  if (peak <= 0) return edges;
  const double hi = high * peak, lo = low * peak;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (thin.at(x, y) > 0 && thin.at(x, y) >= hi) {
        edges.at(x, y) = 1;
        queue.emplace_back(x, y);
      }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (!edges.contains(nx, ny) || edges.at(nx, ny)) continue;
        if (thin.at(nx, ny) > 0 && thin.at(nx, ny) >= lo) {
          edges.at(nx, ny) = 1;
          queue.emplace_back(nx, ny);
        }
      }
  }
  return edges;
}

Field laplacian(const Field& s, const BinaryMap* support) {
  Field out(s.width(), s.height());
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x) {
      const double c = s.at(x, y);
      auto nb = [&](int nx, int ny) {
        if (support) {
          nx = std::clamp(nx, 0, s.width() - 1);
          ny = std::clamp(ny, 0, s.height() - 1);
          if (!support->at(nx, ny)) return c;
        }
        return s.clamped(nx, ny);
      };
      out.at(x, y) = nb(x + 1, y) + nb(x - 1, y) + nb(x, y + 1) + nb(x, y - 1) - 4 * c;
    }
  return out;
}

Field log_response(const GrayImage& img, double sigma) {
  return laplacian(gaussian_filter(static_cast<const Field&>(img), sigma));
}

ComponentSet connected_components(const BinaryMap& binary) {
  const int w = binary.width(), h = binary.height();
  Grid<int> raw(w, h, 0);
  struct Acc {
    int count = 0, x0, y0, x1, y1;
  };
  std::vector<Acc> acc;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!binary.at(x, y) || raw.at(x, y)) continue;
      const int id = static_cast<int>(acc.size()) + 1;
      Acc a{0, x, y, x, y};
      raw.at(x, y) = id;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        ++a.count;
        a.x0 = std::min(a.x0, cx), a.x1 = std::max(a.x1, cx);
        a.y0 = std::min(a.y0, cy), a.y1 = std::max(a.y1, cy);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (binary.contains(nx, ny) && binary.at(nx, ny) && !raw.at(nx, ny)) {
              raw.at(nx, ny) = id;
              stack.emplace_back(nx, ny);
            }
          }
      }
      acc.push_back(a);
    }

  std::vector<int> order(acc.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (acc[a].count != acc[b].count) return acc[a].count > acc[b].count;
    if (acc[a].y0 != acc[b].y0) return acc[a].y0 < acc[b].y0;
    return acc[a].x0 < acc[b].x0;
  });
  std::vector<int> remap(acc.size() + 1, 0);
  ComponentSet out{Grid<int>(w, h, 0), {}};
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const Acc& a = acc[order[rank]];
    const int id = static_cast<int>(rank) + 1;
    remap[order[rank] + 1] = id;
    out.components.push_back({id, a.count, {a.x0, a.y0, a.x1 - a.x0 + 1, a.y1 - a.y0 + 1}});
  }
  for (size_t i = 0; i < raw.size(); ++i) out.labels.data()[i] = remap[raw.data()[i]];
  return out;
}

BinaryMap dilate(const BinaryMap& binary, int radius) {
  if (radius <= 0) return binary;
  BinaryMap out(binary.width(), binary.height());
  for (int y = 0; y < binary.height(); ++y)
    for (int x = 0; x < binary.width(); ++x) {
      if (!binary.at(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          if (out.contains(x + dx, y + dy)) out.at(x + dx, y + dy) = 1;
    }
  return out;
}

double sample_bilinear(const Field& img, double x, double y) {
  x = std::clamp(x, 0.0, double(img.width() - 1));
  y = std::clamp(y, 0.0, double(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  const double a = img.clamped(x0, y0), b = img.clamped(x0 + 1, y0);
  const double c = img.clamped(x0, y0 + 1), d = img.clamped(x0 + 1, y0 + 1);
  // Skip zero-weight taps so exact integer positions reproduce the pixel value.
  const double top = fx == 0 ? a : a + (b - a) * fx;
  const double bottom = fx == 0 ? c : c + (d - c) * fx;
  return fy == 0 ? top : top + (bottom - top) * fy;
}

GrayImage resample(const GrayImage& img, int width, int height) {
  GrayImage out(width, height);
  const double sx = double(img.width()) / width, sy = double(img.height()) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y) = std::clamp(sample_bilinear(img, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5), 0.0, 1.0);
  return out;
}

GrayImage crop(const GrayImage& img, const Box& box) {
  const int x0 = std::max(0, box.x), y0 = std::max(0, box.y);
  const int x1 = std::min(img.width(), box.x + box.w), y1 = std::min(img.height(), box.y + box.h);
  if (x1 <= x0 || y1 <= y0) fail(ErrorCode::kEmptyPatch, "crop box outside the image");
  GrayImage out(x1 - x0, y1 - y0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) out.at(x - x0, y - y0) = img.at(x, y);
  return out;
}

// -- PNM ---------------------------------------------------------------------

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

namespace {

std::vector<std::uint8_t> header(const char* magic, int w, int h, const std::string& comment) {
  std::ostringstream os;
  os << magic << '\n';
  if (!comment.empty()) os << "# " << comment << '\n';
  os << w << ' ' << h << "\n255\n";
  const std::string s = os.str();
  return {s.begin(), s.end()};
}

struct PnmHeader {
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  size_t data_offset = 0;
  std::string comment;
};

PnmHeader parse_header(std::span<const std::uint8_t> bytes) {
  PnmHeader hdr;
  size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        const size_t start = pos + 1;
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        if (hdr.comment.empty()) {
          std::string c(bytes.begin() + start, bytes.begin() + pos);
          c.erase(0, c.find_first_not_of(' '));
          hdr.comment = c;
        }
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip_space();
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') t += char(bytes[pos++]);
    if (t.empty()) fail(ErrorCode::kBadImageFile, "truncated PNM header");
    return t;
  };
  hdr.magic = token();
  try {
    hdr.width = std::stoi(token());
    hdr.height = std::stoi(token());
    hdr.maxval = std::stoi(token());
  } catch (const std::logic_error&) {
    fail(ErrorCode::kBadImageFile, "malformed PNM header");
  }
  if (pos >= bytes.size()) fail(ErrorCode::kBadImageFile, "missing PNM raster");
  hdr.data_offset = pos + 1;  // exactly one whitespace byte after maxval
  if (hdr.width <= 0 || hdr.height <= 0 || hdr.maxval != 255)
    fail(ErrorCode::kBadImageFile, "only 8-bit PNM with positive dimensions is supported");
  return hdr;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const GrayImage& img, const std::string& comment) {
  auto out = header("P5", img.width(), img.height(), comment);
  for (double v : img.data()) out.push_back(to_byte(v));
  return out;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img, const std::string& comment) {
  auto out = header("P6", img.width(), img.height(), comment);
  for (const Rgb& p : img.data()) {
    out.push_back(to_byte(p.r));
    out.push_back(to_byte(p.g));
    out.push_back(to_byte(p.b));
  }
  return out;
}

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  const PnmHeader hdr = parse_header(bytes);
  if (hdr.magic != "P5") fail(ErrorCode::kBadImageFile, "expected binary PGM (P5)");
  const size_t n = static_cast<size_t>(hdr.width) * hdr.height;
  if (bytes.size() < hdr.data_offset + n) fail(ErrorCode::kBadImageFile, "truncated PGM raster");
  GrayImage img(hdr.width, hdr.height);
  for (size_t i = 0; i < n; ++i) img.data()[i] = bytes[hdr.data_offset + i] / 255.0;
  return img;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  const PnmHeader hdr = parse_header(bytes);
  if (hdr.magic != "P6") fail(ErrorCode::kBadImageFile, "expected binary PPM (P6)");
  const size_t n = static_cast<size_t>(hdr.width) * hdr.height;
  if (bytes.size() < hdr.data_offset + 3 * n) fail(ErrorCode::kBadImageFile, "truncated PPM raster");
  RgbImage img(hdr.width, hdr.height);
  for (size_t i = 0; i < n; ++i) {
    const auto* p = &bytes[hdr.data_offset + 3 * i];
    img.data()[i] = {p[0] / 255.0, p[1] / 255.0, p[2] / 255.0};
  }
  return img;
}

std::string pnm_comment(std::span<const std::uint8_t> bytes) { return parse_header(bytes).comment; }

void write_pgm(const std::filesystem::path& path, const GrayImage& img, const std::string& comment) {
  io::write_file(path, encode_pgm(img, comment));
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img, const std::string& comment) {
  io::write_file(path, encode_ppm(img, comment));
}

GrayImage read_pgm(const std::filesystem::path& path) { return decode_pgm(io::read_file(path)); }
RgbImage read_ppm(const std::filesystem::path& path) { return decode_ppm(io::read_file(path)); }

}  // namespace pseal::imaging
