#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ffrt/numerics/autograd.hpp"

namespace ffrt {

// Named learnable tensors in registration order. Registration order is the
// canonical order for checkpoints and optimizer state.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init) {
    require(!index_.contains(name), ErrorKind::parameter, "duplicate parameter name '", name, "'");
    init.requires_grad = true;
    index_.emplace(name, values_.size());
    names_.push_back(name);
    values_.push_back(std::move(init));
    return values_.back();
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  Tensor& at(const std::string& name) { return values_[lookup(name)]; }
  const Tensor& at(const std::string& name) const { return values_[lookup(name)]; }
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorKind::parameter, "unknown parameter '", name, "'");
    return it->second;
  }

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.numel();
    return n;
  }

  // Parameters whose name starts with prefix.
  std::size_t scalar_count(const std::string& prefix) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (names_[i].starts_with(prefix)) n += values_[i].numel();
    return n;
  }

  void zero_grads() {
    for (auto& v : values_) v.zero_grad();
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t> index_;
};

// Exposes a ParamStore's tensors as tape leaves, created on first use.
class Binding {
 public:
  Binding(Tape& tape, const ParamStore& store, bool requires_grad = true)
      : tape_(tape), store_(store), requires_grad_(requires_grad), vars_(store.size()) {}

  // Binds pre-made leaves, one per parameter in store order.
  Binding(Tape& tape, const ParamStore& store, std::vector<Var> vars)
      : tape_(tape), store_(store), requires_grad_(true), vars_(std::move(vars)) {
    require(vars_.size() == store.size(), ErrorKind::dimension, "binding: expected ", store.size(), " leaves, got ",
            vars_.size());
  }

  Var operator()(const std::string& name) {
    const std::size_t i = store_.lookup(name);
    if (!vars_[i].valid()) vars_[i] = tape_.leaf(Tensor(store_.value(i).shape(), store_.value(i).values()), requires_grad_);
    return vars_[i];
  }

  bool has(const std::string& name) const { return store_.contains(name); }
  Tape& tape() { return tape_; }

  // Copies accumulated gradients into the store's grad slots (zeros for unused parameters).
  void collect_grads(ParamStore& target) const {
    for (std::size_t i = 0; i < target.size(); ++i) {
      Tensor& p = target.value(i);
      p.zero_grad();
      if (!vars_[i].valid()) continue;
      const Tensor& g = tape_.grad(vars_[i]);
      if (g.numel() == p.numel()) *p.grad = g.values();
    }
  }

 private:
  Tape& tape_;
  const ParamStore& store_;
  bool requires_grad_;
  std::vector<Var> vars_;
};

// Fan-in scaled normal init for conv weights [Cout, Cin/g, kh, kw].
inline Tensor kaiming_normal(Shape s, std::mt19937_64& rng, double gain = std::sqrt(2.0)) {
  Tensor t(s);
  const double fan_in = static_cast<double>(s.c) * s.h * s.w;
  std::normal_distribution<double> dist(0.0, gain / std::sqrt(fan_in));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace ffrt
