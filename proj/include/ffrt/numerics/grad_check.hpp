#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "ffrt/numerics/autograd.hpp"

namespace ffrt {

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates probed per input; 0 probes all of them.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

// Compares reverse-mode gradients of a scalar function against central
// differences. Error per coordinate is |analytic - numeric| / max(1, |analytic|).
inline GradCheckResult grad_check_detailed(const ScalarFn& f, std::vector<Tensor> inputs,
                                           const GradCheckOptions& opt = {}) {
  require(opt.eps >= 1e-7 && opt.eps <= 1e-4, ErrorKind::parameter, "grad_check: eps must lie in [1e-7, 1e-4], got ",
          opt.eps);
  std::vector<std::vector<double>> analytic(inputs.size());
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(Tensor(t.shape(), t.values()), true));
    Var out = f(tape, vars);
    require(out.value().numel() == 1, ErrorKind::dimension, "grad_check: function must return a scalar");
    require(std::isfinite(out.value()[0]), ErrorKind::numeric, "grad_check: non-finite function value");
    tape.backward(out);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Tensor& g = tape.grad(vars[i]);
      analytic[i] = g.numel() == inputs[i].numel() ? g.values() : std::vector<double>(inputs[i].numel(), 0.0);
    }
  }
  auto evaluate = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(Tensor(t.shape(), t.values()), false));
    const double v = f(tape, vars).value()[0];
    require(std::isfinite(v), ErrorKind::numeric, "grad_check: non-finite function value under perturbation");
    return v;
  };
  std::mt19937_64 rng(opt.seed);
  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<std::size_t> coords(inputs[i].numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.max_coords > 0 && coords.size() > opt.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opt.max_coords);
    }
    for (std::size_t c : coords) {
      const double orig = inputs[i][c];
      inputs[i][c] = orig + opt.eps;
      const double fp = evaluate();
      inputs[i][c] = orig - opt.eps;
      const double fm = evaluate();
      inputs[i][c] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.eps);
      const double a = analytic[i][c];
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
      ++result.coords_checked;
    }
  }
  return result;
}

inline double grad_check(const ScalarFn& f, std::vector<Tensor> inputs, double eps = 1e-5) {
  return grad_check_detailed(f, std::move(inputs), GradCheckOptions{eps, 0, 0}).max_rel_error;
}

}  // namespace ffrt
