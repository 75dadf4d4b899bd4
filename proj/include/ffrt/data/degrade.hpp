#pragma once

// Robustness degradations. All map [0,1] images to [0,1] images.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ffrt/numerics/autograd.hpp"
#include "ffrt/numerics/ops.hpp"

namespace ffrt {

enum class DegradationKind { gaussian_blur, gaussian_noise, resize, jpeg_like };

inline std::string to_string(DegradationKind k) {
  switch (k) {
    case DegradationKind::gaussian_blur: return "gaussian_blur";
    case DegradationKind::gaussian_noise: return "gaussian_noise";
    case DegradationKind::resize: return "resize";
    case DegradationKind::jpeg_like: return "jpeg_like";
  }
  return "unknown";
}

inline DegradationKind parse_degradation_kind(const std::string& s) {
  for (auto k : {DegradationKind::gaussian_blur, DegradationKind::gaussian_noise, DegradationKind::resize,
                 DegradationKind::jpeg_like})
    if (to_string(k) == s) return k;
  fail(ErrorKind::config, "unknown degradation kind '", s, "'");
}

inline std::vector<double> gaussian_taps(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double s = 0.0;
  for (int i = -r; i <= r; ++i) s += k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (auto& v : k) v /= s;
  return k;
}

// Separable Gaussian, radius ceil(3 sigma), reflect padding.
inline Tensor gaussian_blur(const Tensor& image, double sigma) {
  require(sigma > 0.0, ErrorKind::parameter, "gaussian_blur: sigma must be > 0, got ", sigma);
  const std::vector<double> k = gaussian_taps(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const Shape s = image.shape();
  Tensor tmp(s), out(s);
  using ag::detail::reflect_index;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* in = image.plane(n, c);
      double* t = tmp.plane(n, c);
      double* o = out.plane(n, c);
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          double acc = 0.0;
          for (int i = -r; i <= r; ++i) acc += k[i + r] * in[y * s.w + reflect_index(x + i, s.w)];
          t[y * s.w + x] = acc;
        }
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          double acc = 0.0;
          for (int i = -r; i <= r; ++i) acc += k[i + r] * t[reflect_index(y + i, s.h) * s.w + x];
          o[y * s.w + x] = acc;
        }
    }
  return out;
}

inline Tensor add_gaussian_noise(const Tensor& image, double stddev, std::uint64_t seed) {
  require(stddev > 0.0, ErrorKind::parameter, "add_gaussian_noise: std must be > 0, got ", stddev);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.numel(); ++i) out[i] = std::clamp(image[i] + dist(rng), 0.0, 1.0);
  return out;
}

// Bilinear down to round(factor * dim), then back up.
inline Tensor resize_degrade(const Tensor& image, double factor) {
  require(factor >= 0.25 && factor <= 2.0, ErrorKind::parameter, "resize_degrade: factor ", factor,
          " outside [0.25, 2]");
  const Shape s = image.shape();
  const int h = static_cast<int>(std::lround(factor * s.h));
  const int w = static_cast<int>(std::lround(factor * s.w));
  require(h >= 8 && w >= 8, ErrorKind::parameter, "resize_degrade: intermediate size ", h, "x", w, " below 8");
  Tensor out = bilinear_resize(bilinear_resize(image, h, w), s.h, s.w);
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

namespace detail {

// Reference quantization tables (ITU T.81 Annex K), natural order.
inline constexpr std::array<int, 64> kLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40, 57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
inline constexpr std::array<int, 64> kChromaQuant = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
    99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

// libjpeg quality scaling.
inline std::array<int, 64> scaled_table(const std::array<int, 64>& base, int quality) {
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> t{};
  for (int i = 0; i < 64; ++i) t[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return t;
}

struct Dct8 {
  std::array<double, 64> c{};  // c[u * 8 + x] = a(u) cos((2x + 1) u pi / 16)
  Dct8() {
    for (int u = 0; u < 8; ++u)
      for (int x = 0; x < 8; ++x)
        c[u * 8 + x] = (u == 0 ? std::sqrt(0.125) : 0.5) * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
  }
  void forward(const double* in, double* out) const {
    double t[64];
    for (int y = 0; y < 8; ++y)
      for (int u = 0; u < 8; ++u) {
        double a = 0.0;
        for (int x = 0; x < 8; ++x) a += c[u * 8 + x] * in[y * 8 + x];
        t[y * 8 + u] = a;
      }
    for (int v = 0; v < 8; ++v)
      for (int u = 0; u < 8; ++u) {
        double a = 0.0;
        for (int y = 0; y < 8; ++y) a += c[v * 8 + y] * t[y * 8 + u];
        out[v * 8 + u] = a;
      }
  }
  void inverse(const double* in, double* out) const {
    double t[64];
    for (int v = 0; v < 8; ++v)
      for (int x = 0; x < 8; ++x) {
        double a = 0.0;
        for (int u = 0; u < 8; ++u) a += c[u * 8 + x] * in[v * 8 + u];
        t[v * 8 + x] = a;
      }
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        double a = 0.0;
        for (int v = 0; v < 8; ++v) a += c[v * 8 + y] * t[v * 8 + x];
        out[y * 8 + x] = a;
      }
  }
};

}  // namespace detail

// JPEG distortion without entropy coding: YCbCr (full range), 8x8 DCT-II,
// quantize/dequantize, inverse. Partial edge blocks replicate the last
// row/column. Single-channel images use the luma path only.
inline Tensor jpeg_like_compress(const Tensor& image, int quality) {
  require(quality >= 1 && quality <= 100, ErrorKind::parameter, "jpeg_like_compress: quality ", quality,
          " outside [1, 100]");
  const Shape s = image.shape();
  require(s.c == 3 || s.c == 1, ErrorKind::dimension, "jpeg_like_compress: expected 1 or 3 channels, got ", s.c);
  const auto luma = detail::scaled_table(detail::kLumaQuant, quality);
  const auto chroma = detail::scaled_table(detail::kChromaQuant, quality);
  static const detail::Dct8 dct;
  Tensor out(s);
  const std::size_t hw = s.plane();
  std::vector<std::array<double, 3>> ycc(hw);
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < hw; ++i) {
      if (s.c == 1) {
        ycc[i] = {image.plane(n, 0)[i] * 255.0, 0.0, 0.0};
        continue;
      }
      const double r = image.plane(n, 0)[i] * 255.0, g = image.plane(n, 1)[i] * 255.0,
                   b = image.plane(n, 2)[i] * 255.0;
      ycc[i] = {0.299 * r + 0.587 * g + 0.114 * b, -0.168736 * r - 0.331264 * g + 0.5 * b,
                0.5 * r - 0.418688 * g - 0.081312 * b};
    }
    const int planes = s.c == 1 ? 1 : 3;
    for (int p = 0; p < planes; ++p) {
      const auto& q = p == 0 ? luma : chroma;
      const double shift = p == 0 ? 128.0 : 0.0;
      for (int by = 0; by < s.h; by += 8)
        for (int bx = 0; bx < s.w; bx += 8) {
          double blk[64], coef[64];
          for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
              const int yy = std::min(by + y, s.h - 1), xx = std::min(bx + x, s.w - 1);
              blk[y * 8 + x] = ycc[static_cast<std::size_t>(yy) * s.w + xx][p] - shift;
            }
          dct.forward(blk, coef);
          for (int i = 0; i < 64; ++i) coef[i] = std::nearbyint(coef[i] / q[i]) * q[i];
          dct.inverse(coef, blk);
          for (int y = 0; y < 8 && by + y < s.h; ++y)
            for (int x = 0; x < 8 && bx + x < s.w; ++x)
              ycc[static_cast<std::size_t>(by + y) * s.w + bx + x][p] = blk[y * 8 + x] + shift;
        }
    }
    for (std::size_t i = 0; i < hw; ++i) {
      const auto [yv, cb, cr] = ycc[i];
      if (s.c == 1) {
        out.plane(n, 0)[i] = std::clamp(yv / 255.0, 0.0, 1.0);
        continue;
      }
      const double rgb[3] = {yv + 1.402 * cr, yv - 0.344136 * cb - 0.714136 * cr, yv + 1.772 * cb};
      for (int c = 0; c < 3; ++c) out.plane(n, c)[i] = std::clamp(rgb[c] / 255.0, 0.0, 1.0);
    }
  }
  return out;
}

struct DegradationSpec {
  DegradationKind kind = DegradationKind::gaussian_blur;
  double param = 1.0;  // sigma | std | scale factor | quality

  void validate() const {
    switch (kind) {
      case DegradationKind::gaussian_blur:
        require(param > 0.0 && param <= 5.0, ErrorKind::config, "gaussian_blur sigma ", param, " outside (0, 5]");
        break;
      case DegradationKind::gaussian_noise:
        require(param > 0.0 && param <= 0.3, ErrorKind::config, "gaussian_noise std ", param, " outside (0, 0.3]");
        break;
      case DegradationKind::resize:
        require(param >= 0.25 && param <= 2.0, ErrorKind::config, "resize factor ", param, " outside [0.25, 2]");
        break;
      case DegradationKind::jpeg_like:
        require(param >= 1.0 && param <= 100.0 && param == std::floor(param), ErrorKind::config, "jpeg quality ",
                param, " must be an integer in [1, 100]");
        break;
    }
  }

  std::string str() const { return to_string(kind) + "(" + std::to_string(param) + ")"; }
};

inline Tensor apply_degradation(const Tensor& image, const DegradationSpec& d, std::uint64_t seed) {
  d.validate();
  switch (d.kind) {
    case DegradationKind::gaussian_blur: return gaussian_blur(image, d.param);
    case DegradationKind::gaussian_noise: return add_gaussian_noise(image, d.param, seed);
    case DegradationKind::resize: return resize_degrade(image, d.param);
    case DegradationKind::jpeg_like: return jpeg_like_compress(image, static_cast<int>(d.param));
  }
  return image;
}

}  // namespace ffrt
