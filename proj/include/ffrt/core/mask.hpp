#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "ffrt/core/error.hpp"

namespace ffrt {

// Binary H x W map, row-major, values 0/1.
struct Mask {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int height, int width, std::uint8_t fill = 0)
      : h(height), w(width), bits(static_cast<std::size_t>(height) * width, fill) {
    require(height >= 0 && width >= 0, ErrorKind::dimension, "mask: negative size");
  }

  std::uint8_t& operator()(int y, int x) { return bits[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t operator()(int y, int x) const { return bits[static_cast<std::size_t>(y) * w + x]; }
  bool inside(int y, int x) const { return y >= 0 && y < h && x >= 0 && x < w; }
  std::size_t size() const { return bits.size(); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  bool empty() const { return count() == 0; }

  friend bool operator==(const Mask&, const Mask&) = default;
};

// Half-open [y0, y1) x [x0, x1).
struct Box {
  int y0 = 0;
  int x0 = 0;
  int y1 = 0;
  int x1 = 0;

  int height() const { return y1 - y0; }
  int width() const { return x1 - x0; }
  bool contains(int y, int x) const { return y >= y0 && y < y1 && x >= x0 && x < x1; }
  friend bool operator==(const Box&, const Box&) = default;
};

inline std::optional<Box> bounding_box(const Mask& m) {
  Box b{m.h, m.w, -1, -1};
  bool any = false;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m(y, x)) {
        any = true;
        b.y0 = std::min(b.y0, y);
        b.x0 = std::min(b.x0, x);
        b.y1 = std::max(b.y1, y + 1);
        b.x1 = std::max(b.x1, x + 1);
      }
  if (!any) return std::nullopt;
  return b;
}

}  // namespace ffrt
