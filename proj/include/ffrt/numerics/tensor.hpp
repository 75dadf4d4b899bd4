#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ffrt/core/error.hpp"

namespace ffrt {

// N x C x H x W, row-major.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  bool valid() const { return n >= 0 && c >= 0 && h >= 0 && w >= 0; }

  std::string str() const {
    return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + "]";
  }

  friend bool operator==(const Shape&, const Shape&) = default;
};

class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(checked_numel(shape), fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    require(data_.size() == checked_numel(shape), ErrorKind::dimension, "tensor data length ", data_.size(),
            " does not match shape ", shape.str());
  }

  // Matrices live in the last two axes: [1, 1, rows, cols].
  static Tensor matrix(int rows, int cols, double fill = 0.0) { return Tensor(Shape{1, 1, rows, cols}, fill); }
  static Tensor matrix(int rows, int cols, std::vector<double> data) {
    return Tensor(Shape{1, 1, rows, cols}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  int rows() const { return shape_.h; }
  int cols() const { return shape_.w; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  double& operator()(int r, int col) { return data_[static_cast<std::size_t>(r) * shape_.w + col]; }
  double operator()(int r, int col) const { return data_[static_cast<std::size_t>(r) * shape_.w + col]; }

  // Start of one (n, c) plane.
  double* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const double* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  Tensor reshaped(Shape s) const { return Tensor(s, data_); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void require_finite(std::string_view what) const {
    if (!all_finite()) fail(ErrorKind::numeric, "non-finite value in ", what);
  }

  bool requires_grad = false;
  std::optional<std::vector<double>> grad;

  void zero_grad() { grad = std::vector<double>(data_.size(), 0.0); }

 private:
  static std::size_t checked_numel(Shape s) {
    require(s.valid(), ErrorKind::dimension, "negative dimension in ", s.str());
    return s.numel();
  }

  Shape shape_{};
  std::vector<double> data_;
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorKind::dimension, "shape mismatch ", a.shape().str(), " vs ",
          b.shape().str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double sum_squares(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return s;
}

}  // namespace ffrt
