#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ffrt/numerics/params.hpp"

namespace ffrt {

struct AdamWHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.025;
};

// Moments for one parameter tensor.
struct AdamWSlot {
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamWState {
  std::uint64_t step = 0;
  AdamWHyper hyper;
  std::vector<AdamWSlot> slots;  // one per parameter, in ParamStore order
};

namespace detail {

inline void adamw_update(std::span<double> param, std::span<const double> grad, AdamWSlot& slot,
                         const AdamWHyper& h, std::uint64_t step) {
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    slot.m[i] = h.beta1 * slot.m[i] + (1.0 - h.beta1) * g;
    slot.v[i] = h.beta2 * slot.v[i] + (1.0 - h.beta2) * g * g;
    const double mhat = slot.m[i] / bc1;
    const double vhat = slot.v[i] / bc2;
    // Decoupled decay: applied to the parameter, not folded into the gradient.
    param[i] -= h.lr * (mhat / (std::sqrt(vhat) + h.eps) + h.weight_decay * param[i]);
  }
}

}  // namespace detail

// Single-tensor step; the step counter is advanced before bias correction.
inline void adamw_step(Tensor& param, std::span<const double> grad, AdamWSlot& slot, const AdamWHyper& h,
                       std::uint64_t& step) {
  require(grad.size() == param.numel(), ErrorKind::dimension, "adamw_step: grad size ", grad.size(),
          " != param size ", param.numel());
  for (double g : grad)
    if (!std::isfinite(g)) fail(ErrorKind::numeric, "adamw_step: non-finite gradient");
  if (slot.m.size() != param.numel()) {
    slot.m.assign(param.numel(), 0.0);
    slot.v.assign(param.numel(), 0.0);
  }
  ++step;
  detail::adamw_update(param.data(), grad, slot, h, step);
}

inline AdamWState make_adamw(const ParamStore& params, const AdamWHyper& h) {
  AdamWState s;
  s.hyper = h;
  s.slots.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.slots[i].m.assign(params.value(i).numel(), 0.0);
    s.slots[i].v.assign(params.value(i).numel(), 0.0);
  }
  return s;
}

// Steps every parameter of the store with the gradients in its grad slots.
inline void adamw_step(ParamStore& params, AdamWState& state) {
  require(state.slots.size() == params.size(), ErrorKind::dimension, "adamw_step: state tracks ",
          state.slots.size(), " tensors, store has ", params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = params.value(i);
    require(p.grad.has_value() && p.grad->size() == p.numel(), ErrorKind::dimension, "adamw_step: missing grad for '",
            params.name(i), "'");
    for (double g : *p.grad)
      if (!std::isfinite(g)) fail(ErrorKind::numeric, "adamw_step: non-finite gradient in '", params.name(i), "'");
  }
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.value(i);
    detail::adamw_update(p.data(), *p.grad, state.slots[i], state.hyper, state.step);
  }
}

}  // namespace ffrt
