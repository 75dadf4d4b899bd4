#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "ffrt/core/mask.hpp"
#include "ffrt/wavelet/haar.hpp"

namespace ffrt {

struct RegionEnergy {
  Box box;
  SubbandEnergy energy;

  // Detail-to-approximation energy ratio; 0 when the region has no LL energy.
  double high_low_ratio() const { return energy.ll > 0.0 ? energy.detail() / energy.ll : 0.0; }
};

// Sub-band energies of the manipulated region's tight bounding box and of an
// equal-size authentic box from the same image.
struct RegionFrequencyStats {
  RegionEnergy manipulated;
  std::optional<RegionEnergy> reference;  // absent when no distinct placement exists

  // Whether the manipulated box carries more detail energy than the reference.
  std::optional<bool> manipulated_higher() const {
    if (!reference) return std::nullopt;
    return manipulated.energy.detail() > reference->energy.detail();
  }
};

// Crops all channels of item 0 to the box, trimmed to even dims.
inline Tensor crop_even(const Tensor& image, const Box& box) {
  const int h = box.height() - box.height() % 2;
  const int w = box.width() - box.width() % 2;
  const Shape s = image.shape();
  Tensor out(Shape{1, s.c, h, w});
  for (int c = 0; c < s.c; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(0, c, y, x) = image.at(0, c, box.y0 + y, box.x0 + x);
  return out;
}

namespace detail {

// Equal-size placement with the fewest mask pixels; ties go to the placement
// closest to the manipulated box, then raster order.
inline std::optional<Box> reference_box(const Mask& mask, const Box& target) {
  const int bh = target.height(), bw = target.width();
  // Summed-area table for O(1) mask counts per placement.
  std::vector<long> sat(static_cast<std::size_t>(mask.h + 1) * (mask.w + 1), 0);
  auto at = [&](int y, int x) -> long& { return sat[static_cast<std::size_t>(y) * (mask.w + 1) + x]; };
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) at(y + 1, x + 1) = mask(y, x) + at(y, x + 1) + at(y + 1, x) - at(y, x);
  auto count = [&](int y0, int x0) { return at(y0 + bh, x0 + bw) - at(y0, x0 + bw) - at(y0 + bh, x0) + at(y0, x0); };
  const long target_count = count(target.y0, target.x0);
  std::optional<Box> best;
  long best_count = std::numeric_limits<long>::max();
  long best_dist = std::numeric_limits<long>::max();
  for (int y = 0; y + bh <= mask.h; ++y)
    for (int x = 0; x + bw <= mask.w; ++x) {
      if (y == target.y0 && x == target.x0) continue;
      const long c = count(y, x);
      const long dist = static_cast<long>(y - target.y0) * (y - target.y0) + static_cast<long>(x - target.x0) * (x - target.x0);
      if (c < best_count || (c == best_count && dist < best_dist)) {
        best = Box{y, x, y + bh, x + bw};
        best_count = c;
        best_dist = dist;
      }
    }
  if (!best || best_count >= target_count) return std::nullopt;
  return best;
}

}  // namespace detail

inline RegionFrequencyStats frequency_report(const Tensor& image, const Mask& mask) {
  const Shape s = image.shape();
  require(s.h == mask.h && s.w == mask.w, ErrorKind::dimension, "frequency_report: mask ", mask.h, "x", mask.w,
          " does not match image ", s.str());
  const auto box = bounding_box(mask);
  require(box.has_value(), ErrorKind::empty_region, "frequency_report: mask is empty");
  require(box->height() >= 2 && box->width() >= 2, ErrorKind::empty_region,
          "frequency_report: bounding box smaller than 2x2");
  RegionFrequencyStats stats;
  stats.manipulated = {*box, subband_energy(crop_even(image, *box))};
  if (auto ref = detail::reference_box(mask, *box)) stats.reference = RegionEnergy{*ref, subband_energy(crop_even(image, *ref))};
  return stats;
}

}  // namespace ffrt
