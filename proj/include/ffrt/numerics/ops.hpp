#pragma once

// Forward and backward kernels over plain tensors. All of them are pure
// functions; the autograd layer in autograd.hpp records them on a tape.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "ffrt/numerics/tensor.hpp"

namespace ffrt {

struct ConvSpec {
  int stride = 1;
  int pad = 0;
  int groups = 1;
};

inline int conv_out_dim(int in, int k, const ConvSpec& spec) {
  return (in + 2 * spec.pad - k) / spec.stride + 1;
}

namespace detail {

inline void check_conv(const Tensor& x, const Tensor& w, const Tensor* b, const ConvSpec& spec) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  require(spec.stride >= 1 && spec.pad >= 0 && spec.groups >= 1, ErrorKind::parameter,
          "conv2d: stride must be >= 1, pad >= 0, groups >= 1");
  require(ws.h >= 1 && ws.w >= 1, ErrorKind::dimension, "conv2d: kernel must be at least 1x1");
  require(xs.c % spec.groups == 0 && ws.n % spec.groups == 0, ErrorKind::dimension,
          "conv2d: channels not divisible by groups (Cin=", xs.c, ", Cout=", ws.n, ", groups=", spec.groups, ")");
  require(ws.c * spec.groups == xs.c, ErrorKind::dimension, "conv2d: kernel expects ", ws.c * spec.groups,
          " input channels, got ", xs.c);
  require(xs.h + 2 * spec.pad >= ws.h && xs.w + 2 * spec.pad >= ws.w, ErrorKind::dimension,
          "conv2d: kernel larger than padded input ", xs.str());
  if (b != nullptr)
    require(b->numel() == static_cast<std::size_t>(ws.n), ErrorKind::dimension, "conv2d: bias length ",
            b->numel(), " != Cout ", ws.n);
  x.require_finite("conv2d input");
}

// Unfolds one group of one batch item into [Cin_g*kh*kw, Ho*Wo].
inline void im2col(const double* src, int cin, int h, int w, int kh, int kw, const ConvSpec& s, int ho, int wo,
                   double* col) {
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < cin; ++c) {
    const double* plane = src + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        double* row = col + (static_cast<std::size_t>(c * kh + ky) * kw + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.pad + ky;
          double* out = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + wo, 0.0);
            continue;
          }
          const double* in = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride - s.pad + kx;
            out[ox] = (ix >= 0 && ix < w) ? in[ix] : 0.0;
          }
        }
      }
    }
  }
}

inline void col2im(const double* col, int cin, int h, int w, int kh, int kw, const ConvSpec& s, int ho, int wo,
                   double* dst) {
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < cin; ++c) {
    double* plane = dst + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const double* row = col + (static_cast<std::size_t>(c * kh + ky) * kw + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.pad + ky;
          if (iy < 0 || iy >= h) continue;
          double* out = plane + static_cast<std::size_t>(iy) * w;
          const double* in = row + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride - s.pad + kx;
            if (ix >= 0 && ix < w) out[ix] += in[ox];
          }
        }
      }
    }
  }
}

// out[m][p] += sum_k a[m][k] * b[k][p]; row-major, a is m x k, b is k x p.
inline void gemm_acc(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t p) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* o0 = out + i * p;
    double* o1 = o0 + p;
    double* o2 = o1 + p;
    double* o3 = o2 + p;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double a0 = a[i * k + kk];
      const double a1 = a[(i + 1) * k + kk];
      const double a2 = a[(i + 2) * k + kk];
      const double a3 = a[(i + 3) * k + kk];
      const double* row = b + kk * p;
#pragma omp simd
      for (std::size_t j = 0; j < p; ++j) {
        const double r = row[j];
        o0[j] += a0 * r;
        o1[j] += a1 * r;
        o2[j] += a2 * r;
        o3[j] += a3 * r;
      }
    }
  }
  for (; i < m; ++i) {
    double* o = out + i * p;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      if (av == 0.0) continue;
      const double* row = b + kk * p;
#pragma omp simd
      for (std::size_t j = 0; j < p; ++j) o[j] += av * row[j];
    }
  }
}

// out[k][p] += sum_m a[m][k] * b[m][p]  (a transposed).
inline void gemm_tn_acc(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
                        std::size_t p) {
  for (std::size_t mm = 0; mm < m; ++mm) {
    const double* brow = b + mm * p;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[mm * k + kk];
      if (av == 0.0) continue;
      double* o = out + kk * p;
#pragma omp simd
      for (std::size_t j = 0; j < p; ++j) o[j] += av * brow[j];
    }
  }
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline bool is_pointwise(const Shape& ws, const ConvSpec& s) {
  return ws.h == 1 && ws.w == 1 && s.stride == 1 && s.pad == 0;
}

}  // namespace detail

// Direct cross-correlation (no kernel flip). w is [Cout, Cin/groups, kh, kw].
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvSpec& spec = {}) {
  detail::check_conv(x, w, bias, spec);
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const int ho = conv_out_dim(xs.h, ws.h, spec);
  const int wo = conv_out_dim(xs.w, ws.w, spec);
  Tensor out(Shape{xs.n, ws.n, ho, wo});
  const int cin_g = ws.c;
  const int cout_g = ws.n / spec.groups;
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  const std::size_t k = static_cast<std::size_t>(cin_g) * ws.h * ws.w;
  const bool pointwise = detail::is_pointwise(ws, spec);
  std::vector<double> col(pointwise ? 0 : k * p);
  for (int n = 0; n < xs.n; ++n) {
    for (int g = 0; g < spec.groups; ++g) {
      const double* src = x.plane(n, g * cin_g);
      const double* cols = src;
      if (!pointwise) {
        detail::im2col(src, cin_g, xs.h, xs.w, ws.h, ws.w, spec, ho, wo, col.data());
        cols = col.data();
      }
      double* dst = out.plane(n, g * cout_g);
      if (bias != nullptr)
        for (int oc = 0; oc < cout_g; ++oc)
          std::fill(dst + oc * p, dst + (oc + 1) * p, (*bias)[g * cout_g + oc]);
      detail::gemm_acc(w.values().data() + static_cast<std::size_t>(g) * cout_g * k, cols, dst, cout_g, k, p);
    }
  }
  return out;
}

// Accumulates into whichever of gx, gw, gb is non-null.
inline void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gout, const ConvSpec& spec,
                            std::vector<double>* gx, std::vector<double>* gw, std::vector<double>* gb) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const Shape os = gout.shape();
  const int cin_g = ws.c;
  const int cout_g = ws.n / spec.groups;
  const std::size_t p = static_cast<std::size_t>(os.h) * os.w;
  const std::size_t k = static_cast<std::size_t>(cin_g) * ws.h * ws.w;
  const bool pointwise = detail::is_pointwise(ws, spec);
  std::vector<double> col(pointwise ? 0 : k * p);
  std::vector<double> gcol(pointwise || gx == nullptr ? 0 : k * p);
  for (int n = 0; n < xs.n; ++n) {
    for (int g = 0; g < spec.groups; ++g) {
      const double* go = gout.plane(n, g * cout_g);
      const double* wg = w.values().data() + static_cast<std::size_t>(g) * cout_g * k;
      if (gb != nullptr)
        for (int oc = 0; oc < cout_g; ++oc) {
          double acc = 0.0;
          for (std::size_t j = 0; j < p; ++j) acc += go[oc * p + j];
          (*gb)[g * cout_g + oc] += acc;
        }
      if (gw != nullptr) {
        const double* src = x.plane(n, g * cin_g);
        const double* cols = src;
        if (!pointwise) {
          detail::im2col(src, cin_g, xs.h, xs.w, ws.h, ws.w, spec, os.h, os.w, col.data());
          cols = col.data();
        }
        double* gwg = gw->data() + static_cast<std::size_t>(g) * cout_g * k;
        for (int oc = 0; oc < cout_g; ++oc)
          for (std::size_t kk = 0; kk < k; ++kk) gwg[oc * k + kk] += detail::dot(go + oc * p, cols + kk * p, p);
      }
      if (gx != nullptr) {
        double* dst = gx->data() + x.index(n, g * cin_g, 0, 0);
        if (pointwise) {
          detail::gemm_tn_acc(wg, go, dst, cout_g, k, p);
        } else {
          std::fill(gcol.begin(), gcol.end(), 0.0);
          detail::gemm_tn_acc(wg, go, gcol.data(), cout_g, k, p);
          detail::col2im(gcol.data(), cin_g, xs.h, xs.w, ws.h, ws.w, spec, os.h, os.w, dst);
        }
      }
    }
  }
}

// Normalizes over the channel axis at every (n, y, x).
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const Shape s = x.shape();
  require(eps > 0.0, ErrorKind::parameter, "layer_norm: eps must be > 0, got ", eps);
  require(gamma.numel() == static_cast<std::size_t>(s.c) && beta.numel() == static_cast<std::size_t>(s.c),
          ErrorKind::dimension, "layer_norm: gamma/beta length must equal C=", s.c);
  Tensor out(s);
  const std::size_t hw = s.plane();
  std::vector<double> mean(hw), var(hw);
  for (int n = 0; n < s.n; ++n) {
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(var.begin(), var.end(), 0.0);
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) mean[i] += xp[i];
    }
    for (auto& m : mean) m /= s.c;
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        const double d = xp[i] - mean[i];
        var[i] += d * d;
      }
    }
    for (auto& v : var) v = 1.0 / std::sqrt(v / s.c + eps);
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.plane(n, c);
      double* op = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) op[i] = gamma[c] * (xp[i] - mean[i]) * var[i] + beta[c];
    }
  }
  return out;
}

inline void layer_norm_backward(const Tensor& x, const Tensor& gamma, double eps, const Tensor& gout,
                                std::vector<double>* gx, std::vector<double>* ggamma, std::vector<double>* gbeta) {
  const Shape s = x.shape();
  const std::size_t hw = s.plane();
  std::vector<double> mean(hw), rstd(hw), sum_d(hw), sum_dx(hw);
  for (int n = 0; n < s.n; ++n) {
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(rstd.begin(), rstd.end(), 0.0);
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) mean[i] += xp[i];
    }
    for (auto& m : mean) m /= s.c;
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        const double d = xp[i] - mean[i];
        rstd[i] += d * d;
      }
    }
    for (auto& v : rstd) v = 1.0 / std::sqrt(v / s.c + eps);
    std::fill(sum_d.begin(), sum_d.end(), 0.0);
    std::fill(sum_dx.begin(), sum_dx.end(), 0.0);
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.plane(n, c);
      const double* gp = gout.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        const double xhat = (xp[i] - mean[i]) * rstd[i];
        if (ggamma != nullptr) (*ggamma)[c] += gp[i] * xhat;
        if (gbeta != nullptr) (*gbeta)[c] += gp[i];
        const double dxhat = gp[i] * gamma[c];
        sum_d[i] += dxhat;
        sum_dx[i] += dxhat * xhat;
      }
    }
    if (gx == nullptr) continue;
    for (int c = 0; c < s.c; ++c) {
      const double* xp = x.plane(n, c);
      const double* gp = gout.plane(n, c);
      double* out = gx->data() + x.index(n, c, 0, 0);
      for (std::size_t i = 0; i < hw; ++i) {
        const double xhat = (xp[i] - mean[i]) * rstd[i];
        const double dxhat = gp[i] * gamma[c];
        out[i] += rstd[i] * (dxhat - (sum_d[i] + xhat * sum_dx[i]) / s.c);
      }
    }
  }
}

// Softmax along the last axis, with max subtraction.
inline Tensor softmax(const Tensor& x) {
  x.require_finite("softmax input");
  Tensor out(x.shape());
  const std::size_t cols = static_cast<std::size_t>(x.shape().w);
  const std::size_t rows = cols == 0 ? 0 : x.numel() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.values().data() + r * cols;
    double* o = out.values().data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= sum;
  }
  return out;
}

// Row-softmax of Q K^T / sqrt(dk). Q is [Tq, dk], K is [Tk, dk].
inline Tensor attention_weights(const Tensor& q, const Tensor& k) {
  require(q.cols() == k.cols(), ErrorKind::dimension, "attention: query width ", q.cols(), " != key width ",
          k.cols());
  require(q.rows() >= 1 && k.rows() >= 1, ErrorKind::dimension, "attention: empty token set");
  const int tq = q.rows();
  const int tk = k.rows();
  const int dk = q.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor logits = Tensor::matrix(tq, tk);
  for (int i = 0; i < tq; ++i)
    for (int j = 0; j < tk; ++j) {
      double acc = 0.0;
      for (int d = 0; d < dk; ++d) acc += q(i, d) * k(j, d);
      logits(i, j) = acc * scale;
    }
  return softmax(logits);
}

// softmax(Q K^T / sqrt(dk)) V with Q [Tq, dk], K [Tk, dk], V [Tk, dv] -> [Tq, dv].
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  require(k.rows() == v.rows(), ErrorKind::dimension, "attention: key count ", k.rows(), " != value count ",
          v.rows());
  const Tensor a = attention_weights(q, k);
  Tensor out = Tensor::matrix(q.rows(), v.cols());
  for (int i = 0; i < q.rows(); ++i)
    for (int j = 0; j < k.rows(); ++j) {
      const double aij = a(i, j);
      for (int d = 0; d < v.cols(); ++d) out(i, d) += aij * v(j, d);
    }
  return out;
}

namespace detail {

struct ResizeTap {
  int i0;
  int i1;
  double frac;
};

// align_corners = false sampling positions.
inline std::vector<ResizeTap> resize_taps(int in, int out) {
  std::vector<ResizeTap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int i0 = static_cast<int>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace detail

inline Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
  require(out_h >= 1 && out_w >= 1, ErrorKind::parameter, "bilinear_resize: output dims must be >= 1");
  const Shape s = x.shape();
  if (s.h == out_h && s.w == out_w) return Tensor(s, x.values());
  const auto ty = detail::resize_taps(s.h, out_h);
  const auto tx = detail::resize_taps(s.w, out_w);
  Tensor out(Shape{s.n, s.c, out_h, out_w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.plane(n, c);
      double* o = out.plane(n, c);
      for (int y = 0; y < out_h; ++y) {
        const auto& a = ty[y];
        const double* r0 = in + static_cast<std::size_t>(a.i0) * s.w;
        const double* r1 = in + static_cast<std::size_t>(a.i1) * s.w;
        for (int xx = 0; xx < out_w; ++xx) {
          const auto& b = tx[xx];
          const double top = r0[b.i0] + (r0[b.i1] - r0[b.i0]) * b.frac;
          const double bot = r1[b.i0] + (r1[b.i1] - r1[b.i0]) * b.frac;
          o[static_cast<std::size_t>(y) * out_w + xx] = top + (bot - top) * a.frac;
        }
      }
    }
  return out;
}

inline void bilinear_resize_backward(const Shape& in_shape, const Tensor& gout, std::vector<double>& gx) {
  const Shape os = gout.shape();
  if (in_shape.h == os.h && in_shape.w == os.w) {
    for (std::size_t i = 0; i < gout.numel(); ++i) gx[i] += gout[i];
    return;
  }
  const auto ty = detail::resize_taps(in_shape.h, os.h);
  const auto tx = detail::resize_taps(in_shape.w, os.w);
  for (int n = 0; n < os.n; ++n)
    for (int c = 0; c < os.c; ++c) {
      const double* g = gout.plane(n, c);
      double* d = gx.data() + ((static_cast<std::size_t>(n) * in_shape.c + c) * in_shape.h) * in_shape.w;
      for (int y = 0; y < os.h; ++y) {
        const auto& a = ty[y];
        for (int xx = 0; xx < os.w; ++xx) {
          const auto& b = tx[xx];
          const double v = g[static_cast<std::size_t>(y) * os.w + xx];
          const double top = v * (1.0 - a.frac);
          const double bot = v * a.frac;
          d[static_cast<std::size_t>(a.i0) * in_shape.w + b.i0] += top * (1.0 - b.frac);
          d[static_cast<std::size_t>(a.i0) * in_shape.w + b.i1] += top * b.frac;
          d[static_cast<std::size_t>(a.i1) * in_shape.w + b.i0] += bot * (1.0 - b.frac);
          d[static_cast<std::size_t>(a.i1) * in_shape.w + b.i1] += bot * b.frac;
        }
      }
    }
}

inline Tensor global_avg_pool(const Tensor& x) {
  const Shape s = x.shape();
  require(s.h >= 1 && s.w >= 1, ErrorKind::dimension, "global_avg_pool: empty spatial extent");
  Tensor out(Shape{s.n, s.c, 1, 1});
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* p = x.plane(n, c);
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += p[i];
      out.at(n, c, 0, 0) = acc / static_cast<double>(hw);
    }
  return out;
}

inline double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v * (1.0 / std::numbers::sqrt2))); }

inline double gelu_grad(double v) {
  const double cdf = 0.5 * (1.0 + std::erf(v * (1.0 / std::numbers::sqrt2)));
  const double pdf = std::exp(-0.5 * v * v) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return cdf + v * pdf;
}

}  // namespace ffrt
