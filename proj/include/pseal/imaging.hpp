#pragma once

// Image containers and the low-level filters the detectors are built on.
// Coordinates: x runs along a row (0..width-1), y down the columns. Pixel
// (x, y) is sampled at the integer position (x, y).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pseal/error.hpp"

namespace pseal::imaging {

template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) fail(ErrorCode::kEmptyInput, "grid dimensions must be positive");
    data_.assign(static_cast<size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_shape(const auto& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  T& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

  /// Edge-clamp replication for out-of-range coordinates.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return at(x, y);
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid&) const = default;

 protected:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Signed real-valued field (gradients, LoG response).
using Field = Grid<double>;
/// Binary per-pixel flags, 0 or 1.
using BinaryMap = Grid<std::uint8_t>;
using EdgeMap = BinaryMap;

/// Luminance raster with values in [0, 1].
class GrayImage : public Grid<double> {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  /// Validates the [0,1] range and the data length.
  static GrayImage from_data(int width, int height, std::vector<double> data);
  /// Clamps each value of a field into [0,1].
  static GrayImage from_field(const Field& field);
};

struct Rgb {
  double r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

class RgbImage : public Grid<Rgb> {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {}) : Grid<Rgb>(width, height, fill) {}
};

/// Rec.601 luma.
GrayImage to_gray(const RgbImage& img);

struct Box {
  int x = 0, y = 0, w = 0, h = 0;
  int area() const { return w * h; }
  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

struct Component {
  int id = 0;
  int pixel_count = 0;
  Box bbox;
};

struct ComponentSet {
  Grid<int> labels;  // 0 = background
  std::vector<Component> components;
};

struct Gradient {
  Field fx, fy, magnitude;
};

/// Normalized, truncated (radius ceil(3 sigma)) 1-D Gaussian taps.
std::vector<double> gaussian_kernel(double sigma);

GrayImage gaussian_filter(const GrayImage& img, double sigma);
Field gaussian_filter(const Field& field, double sigma);

/// 3x3 Sobel gradients, edge-clamped. Throws kImageTooSmall below 3x3.
Gradient gradient(const Field& img);

/// Canny edges. `low`/`high` are fractions of the maximum gradient magnitude.
EdgeMap canny(const GrayImage& img, double sigma, double low = 0.1, double high = 0.3);

/// Gaussian smoothing followed by the 5-point discrete Laplacian.
Field log_response(const GrayImage& img, double sigma);

/// 5-point discrete Laplacian. With `support`, neighbors outside it are
/// replaced by the center value (zero-flux boundary).
Field laplacian(const Field& field, const BinaryMap* support = nullptr);

/// 8-connected labeling. Components ordered by descending pixel count, ties by
/// (bbox.y, bbox.x); ids are 1..n in that order.
ComponentSet connected_components(const BinaryMap& binary);

/// Dilation by a (2r+1)x(2r+1) square.
BinaryMap dilate(const BinaryMap& binary, int radius);

/// Bilinear sample with clamp-to-edge.
double sample_bilinear(const Field& img, double x, double y);

/// Resamples to (width, height) by bilinear interpolation over pixel centers.
GrayImage resample(const GrayImage& img, int width, int height);

/// Extracts the clipped sub-image covered by `box`.
GrayImage crop(const GrayImage& img, const Box& box);

// -- PNM I/O (binary P5 / P6, 8-bit, round-half-up scaling by 255) ---------

std::uint8_t to_byte(double v);

void write_pgm(const std::filesystem::path& path, const GrayImage& img,
               const std::string& comment = {});
void write_ppm(const std::filesystem::path& path, const RgbImage& img,
               const std::string& comment = {});
std::vector<std::uint8_t> encode_pgm(const GrayImage& img, const std::string& comment = {});
std::vector<std::uint8_t> encode_ppm(const RgbImage& img, const std::string& comment = {});

GrayImage read_pgm(const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

/// First comment line of a PNM header ("" when absent).
std::string pnm_comment(std::span<const std::uint8_t> bytes);

}  // namespace pseal::imaging
