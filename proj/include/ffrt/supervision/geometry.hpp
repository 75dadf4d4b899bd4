#pragma once

// Mask geometry: Canny edges, dilation, connected components and the
// per-pixel centroid offsets used as position targets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "ffrt/core/mask.hpp"
#include "ffrt/numerics/tensor.hpp"

namespace ffrt {

struct CannyOptions {
  double sigma = 1.0;
  double low = 0.1;   // fraction of the maximum gradient magnitude
  double high = 0.2;
  int margin = 6;     // zero border added before filtering
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double s = 0.0;
  for (int i = -r; i <= r; ++i) s += k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (auto& v : k) v /= s;
  return k;
}

// Separable blur of a plane with zero outside.
inline std::vector<double> blur_zero(const std::vector<double>& src, int h, int w, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(src.size(), 0.0), out(src.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < w) acc += k[i + r] * src[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < h) acc += k[i + r] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

}  // namespace detail

// Canny detector on a binary mask. The mask is embedded in a zero margin so
// that regions touching the frame still produce a closed edge ring.
//
// Non-maximum suppression keeps a pixel when its magnitude is not below either
// neighbour across the gradient direction. On a plateau (equal magnitudes, as
// happens across a blurred step) the pixel with the lower smoothed value is
// dropped, which places the edge on the inside of the region. Survivors that
// still fall outside the mask are snapped inward (see the end).
inline Mask canny_edges(const Mask& mask, const CannyOptions& opt = {}) {
  require(opt.sigma > 0.0, ErrorKind::parameter, "canny: sigma must be > 0");
  require(opt.low >= 0.0 && opt.low <= opt.high, ErrorKind::parameter, "canny: need 0 <= low <= high");
  Mask edges(mask.h, mask.w);
  if (mask.empty()) return edges;
  const int m = std::max(opt.margin, 1);
  const int h = mask.h + 2 * m, w = mask.w + 2 * m;
  const auto at = [w](int y, int x) { return static_cast<std::size_t>(y) * w + x; };

  std::vector<double> src(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) src[at(y + m, x + m)] = mask(y, x) ? 1.0 : 0.0;
  const std::vector<double> g = detail::blur_zero(src, h, w, detail::gaussian_kernel(opt.sigma));

  std::vector<double> gx(g.size(), 0.0), gy(g.size(), 0.0), mag(g.size(), 0.0);
  double peak = 0.0;
  for (int y = 1; y + 1 < h; ++y)
    for (int x = 1; x + 1 < w; ++x) {
      const double a = g[at(y - 1, x - 1)], b = g[at(y - 1, x)], c = g[at(y - 1, x + 1)];
      const double d = g[at(y, x - 1)], f = g[at(y, x + 1)];
      const double p = g[at(y + 1, x - 1)], q = g[at(y + 1, x)], r = g[at(y + 1, x + 1)];
      gx[at(y, x)] = (c + 2 * f + r) - (a + 2 * d + p);
      gy[at(y, x)] = (p + 2 * q + r) - (a + 2 * b + c);
      mag[at(y, x)] = std::hypot(gx[at(y, x)], gy[at(y, x)]);
      peak = std::max(peak, mag[at(y, x)]);
    }
  if (peak == 0.0) return edges;
  const double tie = 1e-9 * peak;

  std::vector<std::uint8_t> keep(g.size(), 0);
  for (int y = 1; y + 1 < h; ++y)
    for (int x = 1; x + 1 < w; ++x) {
      const double v = mag[at(y, x)];
      if (v == 0.0) continue;
      double ang = std::atan2(gy[at(y, x)], gx[at(y, x)]) * 180.0 / std::numbers::pi;
      ang = std::fmod(ang + 180.0, 180.0);
      int dy = 0, dx = 1;
      if (ang >= 22.5 && ang < 67.5) dy = 1, dx = 1;
      else if (ang >= 67.5 && ang < 112.5) dy = 1, dx = 0;
      else if (ang >= 112.5 && ang < 157.5) dy = 1, dx = -1;
      bool ok = true;
      for (int s : {1, -1}) {
        const std::size_t j = at(y + s * dy, x + s * dx);
        if (mag[j] > v + tie) ok = false;
        else if (std::abs(mag[j] - v) <= tie && g[j] > g[at(y, x)]) ok = false;
      }
      keep[at(y, x)] = ok;
    }

  // Hysteresis: weak pixels survive when 8-connected to a strong one.
  std::vector<std::uint8_t> state(g.size(), 0);  // 1 weak, 2 accepted
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!keep[i] || mag[i] < opt.low * peak) continue;
    state[i] = 1;
  }
  for (std::size_t i = 0; i < g.size(); ++i)
    if (state[i] == 1 && mag[i] >= opt.high * peak) {
      state[i] = 2;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int y = static_cast<int>(i / w), x = static_cast<int>(i % w);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int yy = y + dy, xx = x + dx;
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
        if (state[at(yy, xx)] == 1) {
          state[at(yy, xx)] = 2;
          stack.push_back(at(yy, xx));
        }
      }
  }
  // A step edge sits between two pixels. Thin regions blur down enough that
  // the outside pixel wins NMS outright, so accepted pixels off the mask are
  // moved one step uphill onto it.
  const double s8 = std::sin(std::numbers::pi / 8);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = at(y, x);
      if (state[i] != 2) continue;
      int my = y - m, mx = x - m;
      if (!mask.inside(my, mx) || !mask(my, mx)) {
        const int sx = (gx[i] > s8 * mag[i]) - (gx[i] < -s8 * mag[i]);
        const int sy = (gy[i] > s8 * mag[i]) - (gy[i] < -s8 * mag[i]);
        if (mask.inside(my + sy, mx + sx) && mask(my + sy, mx + sx)) my += sy, mx += sx;
      }
      if (mask.inside(my, mx)) edges(my, mx) = 1;
    }
  return edges;
}

// k x k dilation. The structuring element covers offsets [-a, k-1-a] with
// anchor a = floor((k-1)/2).
inline Mask dilate(const Mask& mask, int k) {
  require(k >= 1, ErrorKind::parameter, "dilate: kernel size must be >= 1, got ", k);
  const int a = (k - 1) / 2;
  Mask out(mask.h, mask.w);
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) {
      if (!mask(y, x)) continue;
      for (int dy = -a; dy < k - a; ++dy)
        for (int dx = -a; dx < k - a; ++dx)
          if (out.inside(y + dy, x + dx)) out(y + dy, x + dx) = 1;
    }
  return out;
}

// Boundary target: dilated Canny edges of the mask.
inline Mask boundary_target(const Mask& mask, int k = 4) { return dilate(canny_edges(mask), k); }

struct Component {
  int label = 0;  // 1-based
  std::size_t size = 0;
  double cx = 0.0;
  double cy = 0.0;
};

struct Components {
  std::vector<int> labels;  // 0 background, else component label, row-major
  std::vector<Component> items;
};

// 8-connected labelling in raster order of first pixel.
inline Components connected_components(const Mask& mask) {
  Components out;
  out.labels.assign(mask.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y0 = 0; y0 < mask.h; ++y0)
    for (int x0 = 0; x0 < mask.w; ++x0) {
      if (!mask(y0, x0) || out.labels[static_cast<std::size_t>(y0) * mask.w + x0] != 0) continue;
      Component c;
      c.label = static_cast<int>(out.items.size()) + 1;
      double sx = 0.0, sy = 0.0;
      stack.push_back({y0, x0});
      out.labels[static_cast<std::size_t>(y0) * mask.w + x0] = c.label;
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        ++c.size;
        sx += x;
        sy += y;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (!mask.inside(yy, xx) || !mask(yy, xx)) continue;
            int& l = out.labels[static_cast<std::size_t>(yy) * mask.w + xx];
            if (l != 0) continue;
            l = c.label;
            stack.push_back({yy, xx});
          }
      }
      c.cx = sx / static_cast<double>(c.size);
      c.cy = sy / static_cast<double>(c.size);
      out.items.push_back(c);
    }
  return out;
}

struct PositionTargets {
  Tensor offsets;  // [1,2,H,W]: channel 0 = x - cx, channel 1 = y - cy, pixels
  Mask valid;
};

inline PositionTargets position_targets(const Mask& mask) {
  const Components cc = connected_components(mask);
  PositionTargets t{Tensor(Shape{1, 2, mask.h, mask.w}), mask};
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) {
      const int l = cc.labels[static_cast<std::size_t>(y) * mask.w + x];
      if (l == 0) continue;
      const Component& c = cc.items[l - 1];
      t.offsets.at(0, 0, y, x) = x - c.cx;
      t.offsets.at(0, 1, y, x) = y - c.cy;
    }
  return t;
}

}  // namespace ffrt
