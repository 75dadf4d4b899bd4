#pragma once

// Named gradient checks: every differentiable primitive, one EWTB block, the
// losses, and a full width-reduced model at 64x64.

#include <chrono>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ffrt/ewtb/ewtb.hpp"
#include "ffrt/network/model.hpp"
#include "ffrt/numerics/grad_check.hpp"
#include "ffrt/supervision/geometry.hpp"
#include "ffrt/supervision/loss.hpp"
#include "ffrt/wavelet/haar.hpp"

namespace ffrt {

struct GradCaseResult {
  std::string name;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  std::size_t coords = 0;
  double seconds = 0.0;

  bool passed() const { return max_rel_error < threshold; }
};

namespace detail {

// Uniform in [lo, hi) from raw engine bits, so values do not depend on the
// standard library's distribution code.
inline Tensor uniform_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  Tensor t(s);
  for (auto& v : t.values()) v = lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return t;
}

inline void uniform_params(ParamStore& store, std::uint64_t seed, double scale) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Tensor r = uniform_tensor(store.value(i).shape(), seed + i, -scale, scale);
    store.value(i).values() = r.values();
  }
}

// Random projection to a scalar; the pooled factor makes it non-linear.
inline Var project(const Var& y, std::uint64_t seed) {
  const Var r = y.tape->leaf(uniform_tensor(y.shape(), seed));
  return ag::sum(ag::mul_channel(ag::add(y, r), ag::global_avg_pool(y)));
}

struct GradCase {
  std::string name;
  double threshold;
  std::function<GradCheckResult()> run;
};

inline Mask box_mask(int h, int w, int y0, int x0, int y1, int x1) {
  Mask m(h, w);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m(y, x) = 1;
  return m;
}

inline std::vector<GradCase> grad_cases(bool include_model) {
  std::vector<GradCase> cases;
  const double op_tol = 1e-5;
  auto unary = [&](std::string name, std::function<Var(const Var&)> op, Shape s = Shape{2, 4, 4, 4}) {
    const std::uint64_t seed = 100 + cases.size();
    cases.push_back({std::move(name), op_tol, [op, s, seed] {
                       const ScalarFn f = [op, seed](Tape&, std::span<const Var> in) { return project(op(in[0]), seed); };
                       return grad_check_detailed(f, {uniform_tensor(s, seed + 1)});
                     }});
  };
  unary("relu", [](const Var& x) { return ag::relu(x); });
  unary("gelu", [](const Var& x) { return ag::gelu(x); });
  unary("softmax_attention", [](const Var& x) {
    return ag::attention(ag::slice_channels(x, 0, 2), ag::slice_channels(x, 1, 2), ag::slice_channels(x, 2, 2));
  });
  unary("bilinear_resize", [](const Var& x) { return ag::bilinear_resize(x, 7, 3); });
  unary("global_avg_pool", [](const Var& x) { return ag::global_avg_pool(x); });
  unary("slice_concat", [](const Var& x) {
    const Var parts[] = {ag::slice_channels(x, 2, 2), ag::slice_channels(x, 0, 1)};
    return ag::concat_channels(parts);
  });
  unary("pad_reflect_crop", [](const Var& x) { return ag::crop(ag::pad(x, 3, 1, ag::PadMode::reflect), 6, 5); });
  unary("pad_zero", [](const Var& x) { return ag::pad(x, 1, 2, ag::PadMode::zero); });
  unary("scale_sub_mul", [](const Var& x) {
    return ag::sub(ag::scale(x, 1.7), ag::mul_channel(x, ag::global_avg_pool(x)));
  });
  unary("dwt2", [](const Var& x) { return ag::dwt2(x); });
  unary("idwt2", [](const Var& x) { return ag::idwt2(x); });

  cases.push_back({"conv2d", op_tol, [] {
                     const ScalarFn f = [](Tape&, std::span<const Var> in) {
                       return project(ag::conv2d(in[0], in[1], in[2], ConvSpec{2, 1, 2}), 150);
                     };
                     return grad_check_detailed(f, {uniform_tensor(Shape{2, 4, 5, 5}, 151),
                                                    uniform_tensor(Shape{4, 2, 3, 3}, 152),
                                                    uniform_tensor(Shape{1, 1, 1, 4}, 153)});
                   }});
  cases.push_back({"layer_norm", op_tol, [] {
                     const ScalarFn f = [](Tape&, std::span<const Var> in) {
                       return project(ag::layer_norm(in[0], in[1], in[2], 1e-6), 160);
                     };
                     return grad_check_detailed(f, {uniform_tensor(Shape{2, 4, 3, 3}, 161),
                                                    uniform_tensor(Shape{1, 1, 1, 4}, 162),
                                                    uniform_tensor(Shape{1, 1, 1, 4}, 163)});
                   }});
  cases.push_back({"losses", op_tol, [] {
                     static const Mask masks[2] = {box_mask(4, 4, 1, 0, 3, 2), box_mask(4, 4, 0, 1, 4, 4)};
                     const Tensor target = uniform_tensor(Shape{2, 2, 4, 4}, 170);
                     const ScalarFn f = [target](Tape&, std::span<const Var> in) {
                       return total_loss(loss_ce(in[0], masks), loss_boundary(in[1], masks),
                                         loss_position(in[2], target, masks), LossWeights{});
                     };
                     return grad_check_detailed(f, {uniform_tensor(Shape{2, 2, 4, 4}, 171, -3, 3),
                                                    uniform_tensor(Shape{2, 2, 4, 4}, 172, -3, 3),
                                                    uniform_tensor(Shape{2, 2, 4, 4}, 173, -3, 3)});
                   }});
  cases.push_back({"ewtb_block", op_tol, [] {
                     const EwtbConfig cfg{4, 2, 0, 4, 3};
                     ParamStore store;
                     std::mt19937_64 rng(180);
                     init_ewtb(store, "blk.", cfg, rng);
                     uniform_params(store, 181, 0.5);
                     std::vector<Tensor> inputs{uniform_tensor(Shape{1, 4, 4, 4}, 182),
                                                uniform_tensor(Shape{1, 3, 2, 2}, 183)};
                     for (std::size_t i = 0; i < store.size(); ++i) inputs.push_back(store.value(i));
                     const ScalarFn f = [&store, cfg](Tape& t, std::span<const Var> in) {
                       Binding b(t, store, std::vector<Var>(in.begin() + 2, in.end()));
                       return project(ewtb_forward(b, "blk.", cfg, in[0], in[1]), 184);
                     };
                     return grad_check_detailed(f, inputs);
                   }});
  if (include_model)
    cases.push_back({"tiny_model", 1e-4, [] {
                       ModelConfig cfg = ModelConfig{}.scaled(4);
                       cfg.input_h = cfg.input_w = 64;
                       Model m(cfg, 190);
                       uniform_params(m.params(), 191, 0.15);
                       const Mask mask = box_mask(64, 64, 20, 10, 40, 44);
                       const Mask bry = boundary_target(mask);
                       Tensor off = position_targets(mask).offsets;
                       for (auto& v : off.values()) v /= 64.0;
                       std::vector<Tensor> inputs{uniform_tensor(Shape{1, 3, 64, 64}, 192, 0.0, 1.0)};
                       for (std::size_t i = 0; i < m.params().size(); ++i) inputs.push_back(m.params().value(i));
                       const ScalarFn f = [&](Tape& t, std::span<const Var> in) {
                         Binding b(t, m.params(), std::vector<Var>(in.begin() + 1, in.end()));
                         const HeadOutputs h = model_forward(b, cfg, in[0]);
                         return total_loss(loss_ce(h.mask_logits, std::span(&mask, 1)),
                                           loss_boundary(h.boundary_logits, std::span(&bry, 1)),
                                           loss_position(h.offsets, off, std::span(&mask, 1)), LossWeights{});
                       };
                       // Two probed coordinates per tensor keeps this to a few seconds.
                       return grad_check_detailed(f, inputs, GradCheckOptions{1e-5, 2, 193});
                     }});
  return cases;
}

}  // namespace detail

inline std::vector<GradCaseResult> run_grad_suite(bool include_model = true) {
  std::vector<GradCaseResult> out;
  for (const auto& c : detail::grad_cases(include_model)) {
    const auto t0 = std::chrono::steady_clock::now();
    const GradCheckResult r = c.run();
    out.push_back({c.name, r.max_rel_error, c.threshold, r.coords_checked,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  }
  return out;
}

}  // namespace ffrt
