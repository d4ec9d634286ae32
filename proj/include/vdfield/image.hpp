#pragma once

#include <cstdint>
#include <vector>

namespace vdfield {

/// Row-major raster, (0,0) at the top-left. Pixel (x, y) covers
/// [x, x+1) x [y, y+1) in pixel coordinates; its centre is (x+0.5, y+0.5).
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;

  Image() = default;
  Image(int w, int h, T fill = T{})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary mask, nonzero = foreground.
using Mask = Image<std::uint8_t>;

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 0;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

using RgbaImage = Image<Rgba>;

}  // namespace vdfield
