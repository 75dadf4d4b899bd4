#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "ffrt/core/mask.hpp"
#include "ffrt/numerics/autograd.hpp"

namespace ffrt {

struct LossWeights {
  double ce = 1.0;
  double bry = 2.0;
  double pos = 5.0;

  void validate() const {
    require(ce >= 0.0 && bry >= 0.0 && pos >= 0.0, ErrorKind::config, "loss weights must be >= 0");
  }
};

struct LossBreakdown {
  double ce = 0.0;
  double bry = 0.0;
  double pos = 0.0;
  double total = 0.0;
};

namespace detail {

inline void check_targets(const Shape& s, std::span<const Mask> masks, const char* what) {
  require(s.c == 2, ErrorKind::dimension, what, ": expected 2 channels, got ", s.c);
  require(static_cast<int>(masks.size()) == s.n, ErrorKind::dimension, what, ": ", masks.size(),
          " masks for batch of ", s.n);
  for (const Mask& m : masks)
    require(m.h == s.h && m.w == s.w, ErrorKind::dimension, what, ": mask ", m.h, "x", m.w, " vs logits ", s.h,
            "x", s.w);
}

}  // namespace detail

// Mean over all pixels of -log softmax(logits)[truth]; class 1 = mask set.
inline Var loss_ce(const Var& logits, std::span<const Mask> masks) {
  const Shape s = logits.shape();
  detail::check_targets(s, masks, "loss_ce");
  const Tensor& z = logits.value();
  const std::size_t hw = s.plane();
  const double count = static_cast<double>(s.n) * static_cast<double>(hw);
  // Class-1 probability per pixel, kept for the backward pass.
  std::vector<double> p1(static_cast<std::size_t>(s.n) * hw);
  double acc = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const double* z0 = z.plane(n, 0);
    const double* z1 = z.plane(n, 1);
    for (std::size_t i = 0; i < hw; ++i) {
      const double d = z1[i] - z0[i];
      // -log p(class) with a stable log1p(exp) form.
      const double nll1 = d > 0 ? std::log1p(std::exp(-d)) : -d + std::log1p(std::exp(d));
      const double nll0 = nll1 + d;
      acc += masks[n].bits[i] ? nll1 : nll0;
      p1[n * hw + i] = 1.0 / (1.0 + std::exp(-d));
    }
  }
  require(std::isfinite(acc), ErrorKind::numeric, "loss_ce: non-finite loss");
  std::vector<std::uint8_t> t(static_cast<std::size_t>(s.n) * hw);
  for (int n = 0; n < s.n; ++n) std::copy(masks[n].bits.begin(), masks[n].bits.end(), t.begin() + n * hw);
  const int li = logits.id;
  return logits.tape->record(Tensor(Shape{1, 1, 1, 1}, acc / count), {logits},
                             [li, s, hw, count, p1 = std::move(p1), t = std::move(t)](Tape& tp, const Tensor& g) {
                               auto* gx = tp.grad_buffer(li);
                               if (gx == nullptr) return;
                               const double k = g[0] / count;
                               for (int n = 0; n < s.n; ++n)
                                 for (std::size_t i = 0; i < hw; ++i) {
                                   const double d1 = p1[n * hw + i] - t[n * hw + i];
                                   (*gx)[(static_cast<std::size_t>(n) * 2 + 1) * hw + i] += k * d1;
                                   (*gx)[(static_cast<std::size_t>(n) * 2) * hw + i] -= k * d1;
                                 }
                             });
}

inline Var loss_boundary(const Var& logits, std::span<const Mask> boundaries) { return loss_ce(logits, boundaries); }

// Sum over both channels of |pred - target|, averaged over valid pixels. An
// empty valid set gives 0.
inline Var loss_position(const Var& pred, const Tensor& target, std::span<const Mask> valid) {
  const Shape s = pred.shape();
  detail::check_targets(s, valid, "loss_position");
  require(target.shape() == s, ErrorKind::dimension, "loss_position: target ", target.shape().str(), " vs pred ",
          s.str());
  const std::size_t hw = s.plane();
  std::size_t count = 0;
  for (const Mask& m : valid) count += m.count();
  double acc = 0.0;
  std::vector<double> sign(pred.value().numel(), 0.0);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < 2; ++c) {
      const double* p = pred.value().plane(n, c);
      const double* t = target.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        if (!valid[n].bits[i]) continue;
        const double d = p[i] - t[i];
        acc += std::abs(d);
        sign[(static_cast<std::size_t>(n) * 2 + c) * hw + i] = (d > 0) - (d < 0);
      }
    }
  const double denom = count > 0 ? static_cast<double>(count) : 1.0;
  require(std::isfinite(acc), ErrorKind::numeric, "loss_position: non-finite loss");
  const int pi = pred.id;
  return pred.tape->record(Tensor(Shape{1, 1, 1, 1}, acc / denom), {pred},
                           [pi, denom, sign = std::move(sign)](Tape& tp, const Tensor& g) {
                             auto* gx = tp.grad_buffer(pi);
                             if (gx == nullptr) return;
                             const double k = g[0] / denom;
                             for (std::size_t i = 0; i < sign.size(); ++i) (*gx)[i] += k * sign[i];
                           });
}

inline LossBreakdown total_loss(const LossBreakdown& parts, const LossWeights& w) {
  w.validate();
  for (double v : {parts.ce, parts.bry, parts.pos})
    require(std::isfinite(v), ErrorKind::numeric, "total_loss: non-finite component");
  LossBreakdown out = parts;
  out.total = w.ce * parts.ce + w.bry * parts.bry + w.pos * parts.pos;
  return out;
}

// Tape version: returns the weighted scalar and fills the breakdown.
inline Var total_loss(const Var& ce, const Var& bry, const Var& pos, const LossWeights& w,
                      LossBreakdown* breakdown = nullptr) {
  const LossBreakdown b = total_loss(LossBreakdown{ce.value()[0], bry.value()[0], pos.value()[0], 0.0}, w);
  if (breakdown != nullptr) *breakdown = b;
  const std::array<Var, 3> terms{ce, bry, pos};
  const std::array<double, 3> weights{w.ce, w.bry, w.pos};
  return ag::weighted_sum(terms, weights);
}

// Tensor versions for evaluation code.
inline double loss_ce(const Tensor& logits, std::span<const Mask> masks) {
  Tape tape;
  return loss_ce(tape.leaf(logits), masks).value()[0];
}

inline double loss_boundary(const Tensor& logits, std::span<const Mask> boundaries) {
  return loss_ce(logits, boundaries);
}

inline double loss_position(const Tensor& pred, const Tensor& target, std::span<const Mask> valid) {
  Tape tape;
  return loss_position(tape.leaf(pred), target, valid).value()[0];
}

}  // namespace ffrt
