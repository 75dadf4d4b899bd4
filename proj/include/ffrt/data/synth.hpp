#pragma once

// Procedural manipulation generator.
//
// A canvas is a smooth colour gradient with a few soft-edged blobs and weak
// i.i.d. sensor-like noise. Manipulations alter one region (ellipse or
// rectangle) and leave every other pixel untouched:
//   splice     region replaced by content of a second canvas with a
//              different noise level
//   copy_move  region replaced by an enlarged (bilinear) copy of another
//              part of the same canvas, which smooths its noise
//   removal    region filled with the mean colour of a thin ring around it,
//              then re-grained with noise stronger than the host's

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ffrt/core/mask.hpp"
#include "ffrt/numerics/ops.hpp"

namespace ffrt {

enum class ManipulationType { authentic, splice, copy_move, removal };

inline std::string to_string(ManipulationType t) {
  switch (t) {
    case ManipulationType::authentic: return "authentic";
    case ManipulationType::splice: return "splice";
    case ManipulationType::copy_move: return "copy_move";
    case ManipulationType::removal: return "removal";
  }
  return "unknown";
}

inline ManipulationType parse_manipulation_type(const std::string& s) {
  for (auto t : {ManipulationType::authentic, ManipulationType::splice, ManipulationType::copy_move,
                 ManipulationType::removal})
    if (to_string(t) == s) return t;
  fail(ErrorKind::parse, "unknown manipulation type '", s, "'");
}

struct SynthSpec {
  ManipulationType type = ManipulationType::splice;
  int height = 64;
  int width = 64;
  double min_region = 0.2;  // region side as a fraction of the canvas side
  double max_region = 0.45;
};

struct SampleMeta {
  ManipulationType type = ManipulationType::authentic;
  std::uint64_t seed = 0;
  std::uint64_t canvas_seed = 0;
  std::uint64_t source_seed = 0;  // second canvas (splice only)
  int attempts = 1;
  std::vector<std::string> degradations;
};

struct Sample {
  Tensor image;  // [1,3,H,W] in [0,1]
  Mask mask;
  SampleMeta meta;
};

namespace detail {

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Derives independent stream seeds (splitmix64).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct CanvasInfo {
  Tensor image;
  double noise = 0.0;
};

inline CanvasInfo make_canvas(std::uint64_t seed, int h, int w, double noise_lo = 0.01, double noise_hi = 0.02) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u(rng); };
  Tensor img(Shape{1, 3, h, w});
  for (int c = 0; c < 3; ++c) {
    const double base = uni(0.25, 0.75), gx = uni(-0.3, 0.3), gy = uni(-0.3, 0.3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(0, c, y, x) = base + gx * (x / double(w) - 0.5) + gy * (y / double(h) - 0.5);
  }
  const int blobs = 2 + static_cast<int>(u(rng) * 3.0);
  for (int b = 0; b < blobs; ++b) {
    const double cy = uni(0, h), cx = uni(0, w);
    const double ry = uni(0.1, 0.35) * h, rx = uni(0.1, 0.35) * w;
    const double soft = uni(0.15, 0.35);
    double shift[3];
    for (double& s : shift) s = uni(-0.25, 0.25);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d = std::hypot((y - cy) / ry, (x - cx) / rx);
        const double a = 1.0 - smoothstep(1.0 - soft, 1.0 + soft, d);
        if (a <= 0.0) continue;
        for (int c = 0; c < 3; ++c) img.at(0, c, y, x) += a * shift[c];
      }
  }
  CanvasInfo info;
  info.noise = uni(noise_lo, noise_hi);
  std::normal_distribution<double> n(0.0, info.noise);
  for (auto& v : img.values()) v = std::clamp(v + n(rng), 0.0, 1.0);
  info.image = std::move(img);
  return info;
}

inline Mask make_region(std::mt19937_64& rng, int h, int w, double lo, double hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int rh = std::max(1, static_cast<int>(std::lround((lo + (hi - lo) * u(rng)) * h)));
  const int rw = std::max(1, static_cast<int>(std::lround((lo + (hi - lo) * u(rng)) * w)));
  const int y0 = static_cast<int>(u(rng) * (h - rh + 1));
  const int x0 = static_cast<int>(u(rng) * (w - rw + 1));
  const bool ellipse = u(rng) < 0.5;
  Mask m(h, w);
  for (int y = y0; y < y0 + rh && y < h; ++y)
    for (int x = x0; x < x0 + rw && x < w; ++x) {
      if (ellipse) {
        const double dy = (y + 0.5 - y0 - rh / 2.0) / (rh / 2.0);
        const double dx = (x + 0.5 - x0 - rw / 2.0) / (rw / 2.0);
        if (dy * dy + dx * dx > 1.0) continue;
      }
      m(y, x) = 1;
    }
  return m;
}

}  // namespace detail

struct SynthResult {
  Sample sample;
  Tensor canvas;  // image before manipulation
};

// Deterministic in (seed, spec). Regions whose bounding box is under 4x4 are
// redrawn from the next sub-seed, up to 16 attempts.
inline SynthResult synth_sample_detailed(std::uint64_t seed, const SynthSpec& spec) {
  require(spec.height >= 32 && spec.width >= 32, ErrorKind::parameter, "synth: canvas ", spec.height, "x",
          spec.width, " below 32x32");
  require(spec.min_region > 0.0 && spec.min_region <= spec.max_region && spec.max_region < 1.0, ErrorKind::parameter,
          "synth: need 0 < min_region <= max_region < 1");
  const int h = spec.height, w = spec.width;
  SynthResult r;
  r.sample.meta.type = spec.type;
  r.sample.meta.seed = seed;
  r.sample.meta.canvas_seed = detail::mix_seed(seed, 0);
  detail::CanvasInfo canvas = detail::make_canvas(r.sample.meta.canvas_seed, h, w);
  r.canvas = canvas.image;
  r.sample.image = canvas.image;
  r.sample.mask = Mask(h, w);
  if (spec.type == ManipulationType::authentic) return r;

  constexpr int kAttempts = 16;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::mt19937_64 rng(detail::mix_seed(seed, 100 + attempt));
    Mask region = detail::make_region(rng, h, w, spec.min_region, spec.max_region);
    const auto box = bounding_box(region);
    if (!box || box->height() < 4 || box->width() < 4) continue;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor out = canvas.image;
    const int bh = box->height(), bw = box->width();

    if (spec.type == ManipulationType::splice) {
      r.sample.meta.source_seed = detail::mix_seed(seed, 1 + attempt);
      // Source noise is clearly stronger than the host's.
      const double lo = canvas.noise + 0.025, hi = canvas.noise + 0.045;
      const Tensor src = detail::make_canvas(r.sample.meta.source_seed, h, w, lo, hi).image;
      const int sy = static_cast<int>(u(rng) * (h - bh + 1)), sx = static_cast<int>(u(rng) * (w - bw + 1));
      const bool flip = u(rng) < 0.5;
      for (int y = box->y0; y < box->y1; ++y)
        for (int x = box->x0; x < box->x1; ++x) {
          if (!region(y, x)) continue;
          const int yy = sy + (y - box->y0);
          const int xx = sx + (flip ? box->x1 - 1 - x : x - box->x0);
          for (int c = 0; c < 3; ++c) out.at(0, c, y, x) = src.at(0, c, yy, xx);
        }
    } else if (spec.type == ManipulationType::copy_move) {
      // Source window of size box/scale, enlarged back to the box.
      const double scale = 1.4 + 0.4 * u(rng);
      const int sh = std::max(2, static_cast<int>(bh / scale)), sw = std::max(2, static_cast<int>(bw / scale));
      const int sy = static_cast<int>(u(rng) * (h - sh + 1)), sx = static_cast<int>(u(rng) * (w - sw + 1));
      Tensor patch(Shape{1, 3, sh, sw});
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < sh; ++y)
          for (int x = 0; x < sw; ++x) patch.at(0, c, y, x) = canvas.image.at(0, c, sy + y, sx + x);
      const Tensor big = bilinear_resize(patch, bh, bw);
      for (int y = box->y0; y < box->y1; ++y)
        for (int x = box->x0; x < box->x1; ++x)
          if (region(y, x))
            for (int c = 0; c < 3; ++c) out.at(0, c, y, x) = big.at(0, c, y - box->y0, x - box->x0);
    } else {
      // Mean of the 3-pixel ring outside the region.
      const int ring = 3;
      double sum[3] = {0, 0, 0};
      std::size_t count = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (region(y, x)) continue;
          bool near = false;
          for (int dy = -ring; dy <= ring && !near; ++dy)
            for (int dx = -ring; dx <= ring && !near; ++dx)
              near = region.inside(y + dy, x + dx) && region(y + dy, x + dx);
          if (!near) continue;
          for (int c = 0; c < 3; ++c) sum[c] += canvas.image.at(0, c, y, x);
          ++count;
        }
      if (count == 0) continue;  // region covers the whole frame
      std::normal_distribution<double> grain(0.0, canvas.noise + 0.02 + 0.02 * u(rng));
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (region(y, x))
            for (int c = 0; c < 3; ++c)
              out.at(0, c, y, x) = std::clamp(sum[c] / static_cast<double>(count) + grain(rng), 0.0, 1.0);
    }
    r.sample.image = std::move(out);
    r.sample.mask = std::move(region);
    r.sample.meta.attempts = attempt + 1;
    return r;
  }
  fail(ErrorKind::parameter, "synth: no valid region after ", kAttempts, " attempts for seed ", seed);
}

inline Sample synth_sample(std::uint64_t seed, const SynthSpec& spec) { return synth_sample_detailed(seed, spec).sample; }

// Cycles splice, copy_move, removal by index; authentic samples are
// interleaved when authentic_every > 0 (every k-th sample).
inline ManipulationType corpus_type(std::size_t index, int authentic_every = 0) {
  if (authentic_every > 0 && (index + 1) % static_cast<std::size_t>(authentic_every) == 0)
    return ManipulationType::authentic;
  static constexpr ManipulationType cycle[3] = {ManipulationType::splice, ManipulationType::copy_move,
                                                ManipulationType::removal};
  return cycle[index % 3];
}

}  // namespace ffrt
