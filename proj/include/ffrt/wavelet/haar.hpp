#pragma once

// One-level orthonormal 2-D Haar transform.
//
// Sub-bands are stacked along channels in blocks of C: LL, LH, HL, HH. The
// first letter is the filter applied along height, the second along width,
// so LH carries horizontal variation (high-pass across columns) and HL
// vertical variation. For a 2x2 block [[a, b], [c, d]]:
//
//   LL = (a + b + c + d) / 2      LH = (a - b + c - d) / 2
//   HL = (a + b - c - d) / 2      HH = (a - b - c + d) / 2

#include <array>
#include <cmath>

#include "ffrt/numerics/autograd.hpp"

namespace ffrt {

enum class Subband { LL = 0, LH = 1, HL = 2, HH = 3 };

inline Tensor dwt2(const Tensor& x) {
  const Shape s = x.shape();
  require(s.h % 2 == 0 && s.w % 2 == 0, ErrorKind::dimension, "dwt2: spatial dims must be even, got ", s.h, "x",
          s.w);
  const int h2 = s.h / 2, w2 = s.w / 2;
  Tensor out(Shape{s.n, 4 * s.c, h2, w2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.plane(n, c);
      double* ll = out.plane(n, c);
      double* lh = out.plane(n, s.c + c);
      double* hl = out.plane(n, 2 * s.c + c);
      double* hh = out.plane(n, 3 * s.c + c);
      for (int i = 0; i < h2; ++i) {
        const double* r0 = in + static_cast<std::size_t>(2 * i) * s.w;
        const double* r1 = r0 + s.w;
        for (int j = 0; j < w2; ++j) {
          const double a = r0[2 * j], b = r0[2 * j + 1], c2 = r1[2 * j], d = r1[2 * j + 1];
          const std::size_t o = static_cast<std::size_t>(i) * w2 + j;
          ll[o] = 0.5 * ((a + b) + (c2 + d));
          lh[o] = 0.5 * ((a - b) + (c2 - d));
          hl[o] = 0.5 * ((a + b) - (c2 + d));
          hh[o] = 0.5 * ((a - b) - (c2 - d));
        }
      }
    }
  return out;
}

inline Tensor idwt2(const Tensor& s4) {
  const Shape s = s4.shape();
  require(s.c % 4 == 0, ErrorKind::dimension, "idwt2: channel count ", s.c, " not divisible by 4");
  const int c1 = s.c / 4;
  Tensor out(Shape{s.n, c1, 2 * s.h, 2 * s.w});
  const int w = 2 * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < c1; ++c) {
      const double* ll = s4.plane(n, c);
      const double* lh = s4.plane(n, c1 + c);
      const double* hl = s4.plane(n, 2 * c1 + c);
      const double* hh = s4.plane(n, 3 * c1 + c);
      double* o = out.plane(n, c);
      for (int i = 0; i < s.h; ++i) {
        double* r0 = o + static_cast<std::size_t>(2 * i) * w;
        double* r1 = r0 + w;
        for (int j = 0; j < s.w; ++j) {
          const std::size_t k = static_cast<std::size_t>(i) * s.w + j;
          r0[2 * j] = 0.5 * ((ll[k] + lh[k]) + (hl[k] + hh[k]));
          r0[2 * j + 1] = 0.5 * ((ll[k] - lh[k]) + (hl[k] - hh[k]));
          r1[2 * j] = 0.5 * ((ll[k] + lh[k]) - (hl[k] + hh[k]));
          r1[2 * j + 1] = 0.5 * ((ll[k] - lh[k]) - (hl[k] - hh[k]));
        }
      }
    }
  return out;
}

// Channels [band*C, (band+1)*C) of a sub-band stack.
inline Tensor subband(const Tensor& stack, Subband band) {
  const Shape s = stack.shape();
  require(s.c % 4 == 0, ErrorKind::dimension, "subband: channel count not divisible by 4");
  const int c1 = s.c / 4;
  Tensor out(Shape{s.n, c1, s.h, s.w});
  const std::size_t chunk = static_cast<std::size_t>(c1) * s.plane();
  for (int n = 0; n < s.n; ++n) {
    const double* src = stack.plane(n, static_cast<int>(band) * c1);
    std::copy(src, src + chunk, out.plane(n, 0));
  }
  return out;
}

// The transform is orthonormal, so each direction's adjoint is the other.
namespace ag {

inline Var dwt2(const Var& x) {
  const int xi = x.id;
  return x.tape->record(ffrt::dwt2(x.value()), {x}, [xi](Tape& tp, const Tensor& g) {
    tp.accumulate(xi, ffrt::idwt2(g).values());
  });
}

inline Var idwt2(const Var& s) {
  const int si = s.id;
  return s.tape->record(ffrt::idwt2(s.value()), {s}, [si](Tape& tp, const Tensor& g) {
    tp.accumulate(si, ffrt::dwt2(g).values());
  });
}

}  // namespace ag

struct SubbandEnergy {
  double ll = 0.0;
  double lh = 0.0;
  double hl = 0.0;
  double hh = 0.0;

  double detail() const { return lh + hl + hh; }
};

// Mean squared coefficient per sub-band.
inline SubbandEnergy subband_energy(const Tensor& x) {
  const Tensor s = dwt2(x);
  const Shape sh = s.shape();
  const int c1 = sh.c / 4;
  std::array<double, 4> acc{};
  for (int n = 0; n < sh.n; ++n)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < c1; ++c) {
        const double* p = s.plane(n, b * c1 + c);
        for (std::size_t i = 0; i < sh.plane(); ++i) acc[b] += p[i] * p[i];
      }
  const double count = static_cast<double>(sh.n) * c1 * sh.plane();
  if (count == 0) return {};
  return {acc[0] / count, acc[1] / count, acc[2] / count, acc[3] / count};
}

}  // namespace ffrt
