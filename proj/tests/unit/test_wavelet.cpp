#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ffrt/data/synth.hpp"
#include "ffrt/numerics/grad_check.hpp"
#include "ffrt/wavelet/frequency.hpp"

using namespace ffrt;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(s);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Separable 1-D Haar: width pass, then height pass.
Tensor separable_haar(const Tensor& x) {
  const Shape s = x.shape();
  const double r = 1.0 / std::sqrt(2.0);
  Tensor lo(Shape{s.n, s.c, s.h, s.w / 2}), hi(lo.shape());
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int j = 0; j < s.w / 2; ++j) {
          lo.at(n, c, y, j) = r * (x.at(n, c, y, 2 * j) + x.at(n, c, y, 2 * j + 1));
          hi.at(n, c, y, j) = r * (x.at(n, c, y, 2 * j) - x.at(n, c, y, 2 * j + 1));
        }
  Tensor out(Shape{s.n, 4 * s.c, s.h / 2, s.w / 2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < s.h / 2; ++i)
        for (int j = 0; j < s.w / 2; ++j) {
          // LL, then LH = low along height of the width high-pass, HL, HH.
          out.at(n, c, i, j) = r * (lo.at(n, c, 2 * i, j) + lo.at(n, c, 2 * i + 1, j));
          out.at(n, s.c + c, i, j) = r * (hi.at(n, c, 2 * i, j) + hi.at(n, c, 2 * i + 1, j));
          out.at(n, 2 * s.c + c, i, j) = r * (lo.at(n, c, 2 * i, j) - lo.at(n, c, 2 * i + 1, j));
          out.at(n, 3 * s.c + c, i, j) = r * (hi.at(n, c, 2 * i, j) - hi.at(n, c, 2 * i + 1, j));
        }
  return out;
}

}  // namespace

TEST(Dwt2, ConstantBlock) {
  const Tensor s = dwt2(Tensor(Shape{1, 1, 2, 2}, 1.0));
  EXPECT_DOUBLE_EQ(s[0], 2.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(s[2], 0.0);
  EXPECT_EQ(s[3], 0.0);
}

TEST(Dwt2, PinnedLayout) {
  const Tensor s = dwt2(Tensor(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}));
  EXPECT_DOUBLE_EQ(s[static_cast<int>(Subband::LL)], 5.0);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(Subband::LH)], -1.0);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(Subband::HL)], -2.0);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(Subband::HH)], 0.0);
}

TEST(Dwt2, MatchesSeparableFilters) {
  const Tensor x = random_tensor(Shape{2, 3, 8, 6}, 1);
  EXPECT_LE(max_abs_diff(dwt2(x), separable_haar(x)), 1e-14);
}

TEST(Dwt2, EnergyPreserved) {
  const Tensor x = random_tensor(Shape{1, 3, 8, 8}, 2);
  EXPECT_LE(std::abs(sum_squares(x) - sum_squares(dwt2(x))), 1e-9);
}

TEST(Dwt2, HorizontalVariationLeavesVerticalBandsEmpty) {
  Tensor x(Shape{1, 1, 6, 8});
  for (int y = 0; y < 6; ++y)
    for (int c = 0; c < 8; ++c) x.at(0, 0, y, c) = std::sin(1.3 * c);
  const Tensor s = dwt2(x);
  const Tensor hl = subband(s, Subband::HL), hh = subband(s, Subband::HH), lh = subband(s, Subband::LH);
  EXPECT_EQ(sum_squares(hl), 0.0);
  EXPECT_EQ(sum_squares(hh), 0.0);
  EXPECT_GT(sum_squares(lh), 0.0);
}

TEST(Dwt2, OddDimsRejected) {
  try {
    dwt2(Tensor(Shape{1, 1, 3, 4}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(Idwt2, Examples) {
  const Tensor zero = idwt2(Tensor(Shape{1, 4, 3, 2}));
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
  Tensor s(Shape{1, 4, 2, 2});
  for (int i = 0; i < 4; ++i) s[i] = 2.0;
  const Tensor ones = idwt2(s);
  for (double v : ones.values()) EXPECT_DOUBLE_EQ(v, 1.0);
  try {
    idwt2(Tensor(Shape{1, 6, 2, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(Idwt2, RoundTripRandom) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const int h = 2 * (1 + static_cast<int>(rng() % 32)), w = 2 * (1 + static_cast<int>(rng() % 32));
    const Tensor x = random_tensor(Shape{1, 2, h, w}, 100 + t);
    EXPECT_LT(max_abs_diff(idwt2(dwt2(x)), x), 1e-9);
    const Tensor st = random_tensor(Shape{1, 8, h / 2, w / 2}, 200 + t);
    EXPECT_LT(max_abs_diff(dwt2(idwt2(st)), st), 1e-9);
  }
}

TEST(Haar, GradientContracts) {
  // Linear maps: projections onto fixed random tensors.
  const ScalarFn fwd = [](Tape& t, std::span<const Var> in) {
    const Var r = t.leaf(random_tensor(Shape{1, 8, 2, 3}, 9));
    const Var s = ag::dwt2(in[0]);
    return ag::sum(ag::mul_channel(s, ag::global_avg_pool(r)));
  };
  const ScalarFn inv = [](Tape& t, std::span<const Var> in) {
    const Var r = t.leaf(random_tensor(Shape{1, 2, 4, 6}, 10));
    return ag::sum(ag::mul_channel(ag::idwt2(in[0]), ag::global_avg_pool(r)));
  };
  EXPECT_LT(grad_check(fwd, {random_tensor(Shape{1, 2, 4, 6}, 11)}), 1e-9);
  EXPECT_LT(grad_check(inv, {random_tensor(Shape{1, 8, 2, 3}, 12)}), 1e-9);
}

TEST(SubbandEnergy, Examples) {
  const SubbandEnergy flat = subband_energy(Tensor(Shape{1, 1, 4, 4}, 0.3));
  EXPECT_EQ(flat.detail(), 0.0);
  Tensor step(Shape{1, 1, 4, 4});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) step.at(0, 0, y, x) = x % 2 == 0 ? 0.0 : 1.0;
  const SubbandEnergy e = subband_energy(step);
  EXPECT_GT(e.detail(), 0.0);
  EXPECT_EQ(e.detail(), e.lh);
  const Tensor x = random_tensor(Shape{2, 3, 6, 4}, 13);
  const Tensor s = separable_haar(x);
  double oracle[4] = {0, 0, 0, 0};
  for (int n = 0; n < 2; ++n)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 6; ++i) oracle[b] += s.plane(n, b * 3 + c)[i] * s.plane(n, b * 3 + c)[i];
  const SubbandEnergy r = subband_energy(x);
  const double count = 2 * 3 * 6;
  EXPECT_LE(std::abs(r.ll - oracle[0] / count), 1e-12);
  EXPECT_LE(std::abs(r.lh - oracle[1] / count), 1e-12);
  EXPECT_LE(std::abs(r.hl - oracle[2] / count), 1e-12);
  EXPECT_LE(std::abs(r.hh - oracle[3] / count), 1e-12);
}

TEST(FrequencyReport, UniformImage) {
  Mask m(16, 16);
  for (int y = 4; y < 8; ++y)
    for (int x = 4; x < 10; ++x) m(y, x) = 1;
  const auto r = frequency_report(Tensor(Shape{1, 3, 16, 16}, 0.4), m);
  ASSERT_TRUE(r.reference.has_value());
  EXPECT_EQ(r.manipulated.energy.detail(), 0.0);
  EXPECT_EQ(r.reference->energy.detail(), 0.0);
  EXPECT_EQ(r.manipulated.box, (Box{4, 4, 8, 10}));
  EXPECT_EQ(r.reference->box.height(), 4);
  EXPECT_EQ(r.reference->box.width(), 6);
  // Reference box avoids the mask entirely.
  for (int y = r.reference->box.y0; y < r.reference->box.y1; ++y)
    for (int x = r.reference->box.x0; x < r.reference->box.x1; ++x) EXPECT_EQ(m(y, x), 0);
  EXPECT_GE(r.manipulated.high_low_ratio(), 0.0);
}

TEST(FrequencyReport, SharpPasteHasMoreDetail) {
  Tensor img(Shape{1, 1, 16, 16}, 0.5);
  Mask m(16, 16);
  for (int y = 2; y < 8; ++y)
    for (int x = 2; x < 8; ++x) {
      m(y, x) = 1;
      img.at(0, 0, y, x) = (x + y) % 2 == 0 ? 0.9 : 0.1;
    }
  const auto r = frequency_report(img, m);
  ASSERT_TRUE(r.manipulated_higher().has_value());
  EXPECT_TRUE(*r.manipulated_higher());
}

TEST(FrequencyReport, FullMaskHasNoReference) {
  const auto r = frequency_report(Tensor(Shape{1, 1, 8, 8}, 0.1), Mask(8, 8, 1));
  EXPECT_FALSE(r.reference.has_value());
  EXPECT_FALSE(r.manipulated_higher().has_value());
}

TEST(FrequencyReport, EmptyMask) {
  try {
    frequency_report(Tensor(Shape{1, 1, 8, 8}), Mask(8, 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_region);
  }
}

TEST(FrequencyReport, SyntheticSpliceAndRemoval) {
  int higher = 0, counted = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto type = seed % 2 == 0 ? ManipulationType::splice : ManipulationType::removal;
    const Sample s = synth_sample(seed, SynthSpec{type});
    const auto r = frequency_report(s.image, s.mask);
    if (!r.manipulated_higher()) continue;
    ++counted;
    higher += *r.manipulated_higher();
  }
  ASSERT_GT(counted, 30);
  EXPECT_GE(higher, 0.8 * counted);
}
