#pragma once

// Reverse-mode differentiation over a linear tape. Each recorded node keeps
// its forward value and a closure that pushes the output gradient into the
// gradient buffers of its inputs.

#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "ffrt/numerics/ops.hpp"
#include "ffrt/numerics/tensor.hpp"

namespace ffrt {

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& gout)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, {}});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  // Registers a derived value. The closure runs only when some input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward fn) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
  }

  Var record(Tensor value, std::span<const Var> inputs, Backward fn) {
    bool needs = false;
    for (const Var& v : inputs) {
      require(v.tape == this, ErrorKind::parameter, "tape: input recorded on a different tape");
      needs = needs || nodes_[v.id].needs_grad;
    }
    nodes_.push_back(Node{std::move(value), Tensor{}, needs, needs ? std::move(fn) : Backward{}});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool needs_grad(const Var& v) const { return nodes_[v.id].needs_grad; }

  // Zero-initialized on first use; nullptr when the node does not need a gradient.
  std::vector<double>* grad_buffer(int id) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return nullptr;
    if (n.grad.numel() != n.value.numel() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
    return &n.grad.values();
  }
  std::vector<double>* grad_buffer(const Var& v) { return grad_buffer(v.id); }

  // Empty tensor when nothing flowed into the node.
  const Tensor& grad(const Var& v) const { return nodes_[v.id].grad; }

  void accumulate(int id, std::span<const double> g) {
    std::vector<double>* buf = grad_buffer(id);
    if (buf == nullptr) return;
    for (std::size_t i = 0; i < g.size(); ++i) (*buf)[i] += g[i];
  }

  void backward(const Var& out) {
    require(out.tape == this, ErrorKind::parameter, "backward: variable belongs to a different tape");
    require(nodes_[out.id].value.numel() == 1, ErrorKind::dimension, "backward: output must be a scalar, got ",
            nodes_[out.id].value.shape().str());
    if (!nodes_[out.id].needs_grad) return;
    (*grad_buffer(out.id))[0] += 1.0;
    for (int id = out.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.backward || n.grad.numel() == 0) continue;
      n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    Backward backward;
  };

  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace ag {

inline Var conv2d(const Var& x, const Var& w, const Var* b, const ConvSpec& spec = {}) {
  Tape& t = *x.tape;
  const Tensor* bias = b != nullptr ? &b->value() : nullptr;
  Tensor out = ffrt::conv2d(x.value(), w.value(), bias, spec);
  const int xi = x.id, wi = w.id, bi = b != nullptr ? b->id : -1;
  auto fn = [xi, wi, bi, spec](Tape& tp, const Tensor& g) {
    ffrt::conv2d_backward(tp.value(xi), tp.value(wi), g, spec, tp.grad_buffer(xi), tp.grad_buffer(wi),
                          bi >= 0 ? tp.grad_buffer(bi) : nullptr);
  };
  if (b != nullptr) return t.record(std::move(out), {x, w, *b}, fn);
  return t.record(std::move(out), {x, w}, fn);
}

inline Var conv2d(const Var& x, const Var& w, const Var& b, const ConvSpec& spec = {}) {
  return conv2d(x, w, &b, spec);
}

inline Var add(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), ErrorKind::dimension, "add: shape mismatch ", a.shape().str(), " vs ",
          b.shape().str());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  const int ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {a, b}, [ai, bi](Tape& tp, const Tensor& g) {
    tp.accumulate(ai, g.values());
    tp.accumulate(bi, g.values());
  });
}

inline Var sub(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), ErrorKind::dimension, "sub: shape mismatch");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  const int ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {a, b}, [ai, bi](Tape& tp, const Tensor& g) {
    tp.accumulate(ai, g.values());
    if (auto* gb = tp.grad_buffer(bi))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gb)[i] -= g[i];
  });
}

inline Var scale(const Var& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * s;
  const int ai = a.id;
  return a.tape->record(std::move(out), {a}, [ai, s](Tape& tp, const Tensor& g) {
    if (auto* ga = tp.grad_buffer(ai))
      for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * s;
  });
}

// x [N,C,H,W] scaled channelwise by gain [N,C,1,1].
inline Var mul_channel(const Var& x, const Var& gain) {
  const Shape xs = x.shape();
  const Shape gs = gain.shape();
  require(gs.n == xs.n && gs.c == xs.c && gs.h == 1 && gs.w == 1, ErrorKind::dimension,
          "mul_channel: gain shape ", gs.str(), " incompatible with ", xs.str());
  Tensor out(xs);
  const std::size_t hw = xs.plane();
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const double s = gain.value().at(n, c, 0, 0);
      const double* in = x.value().plane(n, c);
      double* o = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) o[i] = in[i] * s;
    }
  const int xi = x.id, gi = gain.id;
  return x.tape->record(std::move(out), {x, gain}, [xi, gi, xs, hw](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(xi);
    const Tensor& gv = tp.value(gi);
    auto* gx = tp.grad_buffer(xi);
    auto* gg = tp.grad_buffer(gi);
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        const std::size_t off = xv.index(n, c, 0, 0);
        const double s = gv.at(n, c, 0, 0);
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
          if (gx != nullptr) (*gx)[off + i] += g[off + i] * s;
          acc += g[off + i] * xv[off + i];
        }
        if (gg != nullptr) (*gg)[gv.index(n, c, 0, 0)] += acc;
      }
  });
}

inline Var relu(const Var& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] > 0.0 ? x.value()[i] : 0.0;
  const int xi = x.id;
  return x.tape->record(std::move(out), {x}, [xi](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(xi);
    if (auto* gx = tp.grad_buffer(xi))
      for (std::size_t i = 0; i < g.numel(); ++i)
        if (xv[i] > 0.0) (*gx)[i] += g[i];
  });
}

inline Var gelu(const Var& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ffrt::gelu(x.value()[i]);
  const int xi = x.id;
  return x.tape->record(std::move(out), {x}, [xi](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(xi);
    if (auto* gx = tp.grad_buffer(xi))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i] * ffrt::gelu_grad(xv[i]);
  });
}

inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tensor out = ffrt::layer_norm(x.value(), gamma.value(), beta.value(), eps);
  const int xi = x.id, gi = gamma.id, bi = beta.id;
  return x.tape->record(std::move(out), {x, gamma, beta}, [xi, gi, bi, eps](Tape& tp, const Tensor& g) {
    ffrt::layer_norm_backward(tp.value(xi), tp.value(gi), eps, g, tp.grad_buffer(xi), tp.grad_buffer(gi),
                              tp.grad_buffer(bi));
  });
}

// Attention between feature maps. q is [N,dk,H,W] (one query per pixel),
// k is [N,dk,h,w] and v is [N,dv,h,w] (one key/value per pixel of a possibly
// different grid). Output is [N,dv,H,W]. If weights_out is set, receives the
// [Tq,Tk] attention matrix of every batch item.
inline Var attention(const Var& q, const Var& k, const Var& v, std::vector<Tensor>* weights_out = nullptr) {
  const Shape qs = q.shape(), ks = k.shape(), vs = v.shape();
  require(qs.n == ks.n && ks.n == vs.n, ErrorKind::dimension, "attention: batch mismatch");
  require(qs.c == ks.c, ErrorKind::dimension, "attention: query width ", qs.c, " != key width ", ks.c);
  require(ks.h == vs.h && ks.w == vs.w, ErrorKind::dimension, "attention: key/value grids differ");
  const int tq = qs.h * qs.w, tk = ks.h * ks.w, dk = qs.c, dv = vs.c;
  require(tq >= 1 && tk >= 1, ErrorKind::dimension, "attention: empty token set");
  const double sc = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor out(Shape{qs.n, dv, qs.h, qs.w});
  // Saved row-stochastic weights, [N, 1, Tq, Tk].
  Tensor weights(Shape{qs.n, 1, tq, tk});
  std::vector<double> row(static_cast<std::size_t>(tk));
  for (int n = 0; n < qs.n; ++n) {
    double* a = weights.plane(n, 0);
    const double* qp = q.value().plane(n, 0);
    const double* kp = k.value().plane(n, 0);
    for (int d = 0; d < dk; ++d) {
      const double* qd = qp + static_cast<std::size_t>(d) * tq;
      const double* kd = kp + static_cast<std::size_t>(d) * tk;
      for (int i = 0; i < tq; ++i) {
        const double qv = qd[i];
        double* ai = a + static_cast<std::size_t>(i) * tk;
#pragma omp simd
        for (int j = 0; j < tk; ++j) ai[j] += qv * kd[j];
      }
    }
    for (int i = 0; i < tq; ++i) {
      double* ai = a + static_cast<std::size_t>(i) * tk;
      double mx = ai[0] * sc;
      for (int j = 0; j < tk; ++j) {
        ai[j] *= sc;
        mx = std::max(mx, ai[j]);
      }
      double sum = 0.0;
      for (int j = 0; j < tk; ++j) {
        ai[j] = std::exp(ai[j] - mx);
        sum += ai[j];
      }
      for (int j = 0; j < tk; ++j) ai[j] /= sum;
    }
    const double* vp = v.value().plane(n, 0);
    double* op = out.plane(n, 0);
    for (int d = 0; d < dv; ++d) {
      const double* vd = vp + static_cast<std::size_t>(d) * tk;
      double* od = op + static_cast<std::size_t>(d) * tq;
      for (int i = 0; i < tq; ++i) od[i] = detail::dot(a + static_cast<std::size_t>(i) * tk, vd, tk);
    }
  }
  if (weights_out != nullptr) {
    weights_out->clear();
    for (int n = 0; n < qs.n; ++n)
      weights_out->push_back(Tensor::matrix(
          tq, tk, std::vector<double>(weights.plane(n, 0), weights.plane(n, 0) + static_cast<std::size_t>(tq) * tk)));
  }
  const int qi = q.id, ki = k.id, vi = v.id;
  return q.tape->record(
      std::move(out), {q, k, v},
      [qi, ki, vi, weights = std::move(weights), tq, tk, dk, dv, sc](Tape& tp, const Tensor& g) {
        const int batch = g.shape().n;
        auto* gq = tp.grad_buffer(qi);
        auto* gk = tp.grad_buffer(ki);
        auto* gv = tp.grad_buffer(vi);
        const Tensor& qv = tp.value(qi);
        const Tensor& kv = tp.value(ki);
        const Tensor& vv = tp.value(vi);
        std::vector<double> da(static_cast<std::size_t>(tq) * tk);
        for (int n = 0; n < batch; ++n) {
          const double* a = weights.plane(n, 0);
          const double* gp = g.plane(n, 0);
          const double* vp = vv.plane(n, 0);
          // dA[i][j] = sum_d g[d][i] v[d][j]
          std::fill(da.begin(), da.end(), 0.0);
          for (int d = 0; d < dv; ++d) {
            const double* gd = gp + static_cast<std::size_t>(d) * tq;
            const double* vd = vp + static_cast<std::size_t>(d) * tk;
            for (int i = 0; i < tq; ++i) {
              const double gi = gd[i];
              double* di = da.data() + static_cast<std::size_t>(i) * tk;
#pragma omp simd
              for (int j = 0; j < tk; ++j) di[j] += gi * vd[j];
            }
          }
          if (gv != nullptr) {
            double* gvp = gv->data() + vv.index(n, 0, 0, 0);
            for (int d = 0; d < dv; ++d) {
              const double* gd = gp + static_cast<std::size_t>(d) * tq;
              double* o = gvp + static_cast<std::size_t>(d) * tk;
              for (int i = 0; i < tq; ++i) {
                const double gi = gd[i];
                const double* ai = a + static_cast<std::size_t>(i) * tk;
#pragma omp simd
                for (int j = 0; j < tk; ++j) o[j] += gi * ai[j];
              }
            }
          }
          if (gq == nullptr && gk == nullptr) continue;
          // Softmax backward, scaled: dL = A * (dA - rowdot(dA, A)) * sc.
          for (int i = 0; i < tq; ++i) {
            double* di = da.data() + static_cast<std::size_t>(i) * tk;
            const double* ai = a + static_cast<std::size_t>(i) * tk;
            const double rd = detail::dot(di, ai, tk);
            for (int j = 0; j < tk; ++j) di[j] = ai[j] * (di[j] - rd) * sc;
          }
          const double* qp = qv.plane(n, 0);
          const double* kp = kv.plane(n, 0);
          for (int d = 0; d < dk; ++d) {
            const double* kd = kp + static_cast<std::size_t>(d) * tk;
            const double* qd = qp + static_cast<std::size_t>(d) * tq;
            if (gq != nullptr) {
              double* o = gq->data() + qv.index(n, d, 0, 0);
              for (int i = 0; i < tq; ++i) o[i] += detail::dot(da.data() + static_cast<std::size_t>(i) * tk, kd, tk);
            }
            if (gk != nullptr) {
              double* o = gk->data() + kv.index(n, d, 0, 0);
              for (int i = 0; i < tq; ++i) {
                const double qi_ = qd[i];
                const double* di = da.data() + static_cast<std::size_t>(i) * tk;
#pragma omp simd
                for (int j = 0; j < tk; ++j) o[j] += qi_ * di[j];
              }
            }
          }
        }
      });
}

inline Var slice_channels(const Var& x, int begin, int count) {
  const Shape s = x.shape();
  require(begin >= 0 && count >= 0 && begin + count <= s.c, ErrorKind::dimension, "slice_channels: [", begin, ",",
          begin + count, ") out of range for C=", s.c);
  Tensor out(Shape{s.n, count, s.h, s.w});
  const std::size_t chunk = static_cast<std::size_t>(count) * s.plane();
  for (int n = 0; n < s.n; ++n) {
    const double* src = x.value().plane(n, begin);
    std::copy(src, src + chunk, out.plane(n, 0));
  }
  const int xi = x.id;
  return x.tape->record(std::move(out), {x}, [xi, begin, chunk, s](Tape& tp, const Tensor& g) {
    auto* gx = tp.grad_buffer(xi);
    if (gx == nullptr) return;
    for (int n = 0; n < s.n; ++n) {
      double* dst = gx->data() + tp.value(xi).index(n, begin, 0, 0);
      const double* src = g.plane(n, 0);
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

inline Var concat_channels(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::dimension, "concat_channels: no inputs");
  const Shape s0 = parts[0].shape();
  int total = 0;
  for (const Var& p : parts) {
    require(p.shape().n == s0.n && p.shape().h == s0.h && p.shape().w == s0.w, ErrorKind::dimension,
            "concat_channels: incompatible shapes ", s0.str(), " vs ", p.shape().str());
    total += p.shape().c;
  }
  Tensor out(Shape{s0.n, total, s0.h, s0.w});
  std::vector<int> offsets;
  int off = 0;
  for (const Var& p : parts) {
    offsets.push_back(off);
    const std::size_t chunk = static_cast<std::size_t>(p.shape().c) * s0.plane();
    for (int n = 0; n < s0.n; ++n) {
      const double* src = p.value().plane(n, 0);
      std::copy(src, src + chunk, out.plane(n, off));
    }
    off += p.shape().c;
  }
  std::vector<int> ids;
  for (const Var& p : parts) ids.push_back(p.id);
  return parts[0].tape->record(std::move(out), parts, [ids, offsets](Tape& tp, const Tensor& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto* gp = tp.grad_buffer(ids[k]);
      if (gp == nullptr) continue;
      const Shape ps = tp.value(ids[k]).shape();
      const std::size_t chunk = static_cast<std::size_t>(ps.c) * ps.plane();
      for (int n = 0; n < ps.n; ++n) {
        const double* src = g.plane(n, offsets[k]);
        double* dst = gp->data() + static_cast<std::size_t>(n) * chunk;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
      }
    }
  });
}

inline Var bilinear_resize(const Var& x, int out_h, int out_w) {
  Tensor out = ffrt::bilinear_resize(x.value(), out_h, out_w);
  const int xi = x.id;
  const Shape in = x.shape();
  return x.tape->record(std::move(out), {x}, [xi, in](Tape& tp, const Tensor& g) {
    if (auto* gx = tp.grad_buffer(xi)) ffrt::bilinear_resize_backward(in, g, *gx);
  });
}

inline Var global_avg_pool(const Var& x) {
  Tensor out = ffrt::global_avg_pool(x.value());
  const int xi = x.id;
  const Shape s = x.shape();
  return x.tape->record(std::move(out), {x}, [xi, s](Tape& tp, const Tensor& g) {
    auto* gx = tp.grad_buffer(xi);
    if (gx == nullptr) return;
    const std::size_t hw = s.plane();
    const double inv = 1.0 / static_cast<double>(hw);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const double v = g.at(n, c, 0, 0) * inv;
        double* d = gx->data() + tp.value(xi).index(n, c, 0, 0);
        for (std::size_t i = 0; i < hw; ++i) d[i] += v;
      }
  });
}

enum class PadMode { zero, reflect };

namespace detail {

inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace detail

// Pads bottom/right only, so cropping back is a top-left window.
inline Var pad(const Var& x, int add_h, int add_w, PadMode mode) {
  const Shape s = x.shape();
  require(add_h >= 0 && add_w >= 0, ErrorKind::parameter, "pad: negative padding");
  if (add_h == 0 && add_w == 0) return x;
  const Shape os{s.n, s.c, s.h + add_h, s.w + add_w};
  Tensor out(os);
  std::vector<int> ry(os.h), rx(os.w);
  for (int y = 0; y < os.h; ++y) ry[y] = y < s.h ? y : (mode == PadMode::reflect ? detail::reflect_index(y, s.h) : -1);
  for (int xx = 0; xx < os.w; ++xx)
    rx[xx] = xx < s.w ? xx : (mode == PadMode::reflect ? detail::reflect_index(xx, s.w) : -1);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.value().plane(n, c);
      double* o = out.plane(n, c);
      for (int y = 0; y < os.h; ++y)
        for (int xx = 0; xx < os.w; ++xx)
          if (ry[y] >= 0 && rx[xx] >= 0) o[static_cast<std::size_t>(y) * os.w + xx] = in[ry[y] * s.w + rx[xx]];
    }
  const int xi = x.id;
  return x.tape->record(std::move(out), {x}, [xi, s, os, ry, rx](Tape& tp, const Tensor& g) {
    auto* gx = tp.grad_buffer(xi);
    if (gx == nullptr) return;
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const double* gp = g.plane(n, c);
        double* d = gx->data() + tp.value(xi).index(n, c, 0, 0);
        for (int y = 0; y < os.h; ++y)
          for (int xx = 0; xx < os.w; ++xx)
            if (ry[y] >= 0 && rx[xx] >= 0) d[ry[y] * s.w + rx[xx]] += gp[static_cast<std::size_t>(y) * os.w + xx];
      }
  });
}

// Top-left h x w window.
inline Var crop(const Var& x, int h, int w) {
  const Shape s = x.shape();
  require(h >= 1 && w >= 1 && h <= s.h && w <= s.w, ErrorKind::dimension, "crop: window ", h, "x", w,
          " exceeds ", s.str());
  if (h == s.h && w == s.w) return x;
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y) {
        const double* in = x.value().plane(n, c) + static_cast<std::size_t>(y) * s.w;
        std::copy(in, in + w, out.plane(n, c) + static_cast<std::size_t>(y) * w);
      }
  const int xi = x.id;
  return x.tape->record(std::move(out), {x}, [xi, s, h, w](Tape& tp, const Tensor& g) {
    auto* gx = tp.grad_buffer(xi);
    if (gx == nullptr) return;
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < h; ++y) {
          const double* src = g.plane(n, c) + static_cast<std::size_t>(y) * w;
          double* d = gx->data() + tp.value(xi).index(n, c, y, 0);
          for (int xx = 0; xx < w; ++xx) d[xx] += src[xx];
        }
  });
}

inline Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  const int xi = x.id;
  return x.tape->record(Tensor(Shape{1, 1, 1, 1}, acc), {x}, [xi](Tape& tp, const Tensor& g) {
    if (auto* gx = tp.grad_buffer(xi))
      for (auto& v : *gx) v += g[0];
  });
}

inline Var mean(const Var& x) {
  require(x.value().numel() > 0, ErrorKind::dimension, "mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().numel()));
}

// sum_i weights[i] * terms[i] over scalar terms.
inline Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  require(terms.size() == weights.size() && !terms.empty(), ErrorKind::dimension,
          "weighted_sum: terms/weights length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i].value().numel() == 1, ErrorKind::dimension, "weighted_sum: terms must be scalars");
    acc += weights[i] * terms[i].value()[0];
  }
  std::vector<int> ids;
  for (const Var& v : terms) ids.push_back(v.id);
  std::vector<double> w(weights.begin(), weights.end());
  return terms[0].tape->record(Tensor(Shape{1, 1, 1, 1}, acc), terms, [ids, w](Tape& tp, const Tensor& g) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (auto* gi = tp.grad_buffer(ids[i])) (*gi)[0] += w[i] * g[0];
  });
}

}  // namespace ag
}  // namespace ffrt
