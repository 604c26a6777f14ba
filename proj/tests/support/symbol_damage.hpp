#pragma once

#include <filesystem>

#include "pseal/imaging.hpp"
#include "pseal/io.hpp"

// Paints a checker of palette colors over the middle half of a PPM symbol
// raster, far more damage than any EC level repairs. `phase` varies the pattern.
inline void deface_symbol(const std::filesystem::path& symbol, int phase = 0) {
  auto bytes = pseal::io::read_file(symbol);
  const auto img = pseal::imaging::read_ppm(symbol);
  const size_t base = bytes.size() - img.size() * 3;
  const int w = img.width(), lo = w / 4, hi = w - w / 4;
  for (int y = lo; y < hi; ++y)
    for (int x = lo; x < hi; ++x) {
      const int c = (x * 7 + y * 3 + phase) % 8;
      const size_t at = base + (static_cast<size_t>(y) * w + x) * 3;
      bytes[at] = (c & 1) ? 255 : 0;
      bytes[at + 1] = (c & 2) ? 255 : 0;
      bytes[at + 2] = (c & 4) ? 255 : 0;
    }
  pseal::io::write_file(symbol, bytes);
}
