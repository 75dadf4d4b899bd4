#pragma once

// Efficient wavelet-guided transformer block.
//
// The block input X is split along channels into `heads` pieces. One query
// map is computed from the whole of X and shared by every head. Each piece
// is Haar-decomposed; its four sub-bands give keys and values at half
// resolution, so every head attends from H*W queries to H*W/4 keys. Value
// channels are gated by support gains pooled from the inspective feature Y.
// A refined copy of the sub-bands is inverted back to full resolution and
// added to the head output, and each head output conditions the next piece
// (cascade) before that piece is decomposed.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ffrt/numerics/params.hpp"
#include "ffrt/wavelet/haar.hpp"

namespace ffrt {

struct EwtbConfig {
  int dim = 128;             // C
  int heads = 4;             // n
  int value_dim = 0;         // per-head value width; 0 means C / n
  int ffn_ratio = 4;
  int support_channels = 0;  // channels of Y; 0 disables the support path
  int refine_kernel = 1;     // kernel of the sub-band refinement conv
  double ln_eps = 1e-6;

  int piece_dim() const { return dim / heads; }
  int v_dim() const { return value_dim > 0 ? value_dim : piece_dim(); }
  int qk_dim() const { return v_dim() / 2; }

  void validate() const {
    require(dim >= 1 && heads >= 1, ErrorKind::config, "ewtb: dim and heads must be positive");
    require(dim % heads == 0, ErrorKind::config, "ewtb: dim ", dim, " not divisible by heads ", heads);
    require(v_dim() % 2 == 0 && v_dim() >= 2, ErrorKind::config, "ewtb: value width ", v_dim(),
            " must be even so the query/key width is exactly half");
    require(ffn_ratio >= 1, ErrorKind::config, "ewtb: ffn_ratio must be >= 1");
    require(refine_kernel >= 1 && refine_kernel % 2 == 1, ErrorKind::config, "ewtb: refine_kernel must be odd");
    require(ln_eps > 0.0, ErrorKind::config, "ewtb: ln_eps must be > 0");
  }
};

// Parameter names under a block prefix.
namespace ewtb_names {
inline std::string head(const std::string& p, int i, const char* leaf) {
  return p + "attn.head" + std::to_string(i) + "." + leaf;
}
}  // namespace ewtb_names

inline void init_ewtb(ParamStore& store, const std::string& p, const EwtbConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const int c = cfg.dim, n = cfg.heads, pd = cfg.piece_dim(), v = cfg.v_dim(), qk = cfg.qk_dim();
  const int k = cfg.refine_kernel;
  store.add(p + "ln1.gamma", Tensor(Shape{1, 1, 1, c}, 1.0));
  store.add(p + "ln1.beta", Tensor(Shape{1, 1, 1, c}));
  store.add(p + "attn.query.w", kaiming_normal(Shape{qk, c, 1, 1}, rng, 1.0));
  store.add(p + "attn.query.b", Tensor(Shape{1, 1, 1, qk}));
  for (int i = 0; i < n; ++i) {
    using ewtb_names::head;
    store.add(head(p, i, "key.w"), kaiming_normal(Shape{qk, 4 * pd, 1, 1}, rng, 1.0));
    store.add(head(p, i, "value.w"), kaiming_normal(Shape{v, 4 * pd, 1, 1}, rng, 1.0));
    store.add(head(p, i, "refine.w"), kaiming_normal(Shape{4 * v, 4 * pd, k, k}, rng, 1.0));
    store.add(head(p, i, "refine.b"), Tensor(Shape{1, 1, 1, 4 * v}));
    if (i + 1 < n) {
      store.add(head(p, i, "cascade.w"), kaiming_normal(Shape{pd, v, 1, 1}, rng, 0.5));
      store.add(head(p, i, "cascade.b"), Tensor(Shape{1, 1, 1, pd}));
    }
  }
  store.add(p + "attn.proj.w", kaiming_normal(Shape{c, n * v, 1, 1}, rng, 0.5));
  store.add(p + "attn.proj.b", Tensor(Shape{1, 1, 1, c}));
  if (cfg.support_channels > 0) {
    Tensor w(Shape{n * v, cfg.support_channels, 1, 1});
    std::normal_distribution<double> small(0.0, 0.01);
    for (auto& x : w.values()) x = small(rng);
    store.add(p + "support.w", std::move(w));
    // Bias 1 starts every gain at neutral.
    store.add(p + "support.b", Tensor(Shape{1, 1, 1, n * v}, 1.0));
  }
  store.add(p + "ln2.gamma", Tensor(Shape{1, 1, 1, c}, 1.0));
  store.add(p + "ln2.beta", Tensor(Shape{1, 1, 1, c}));
  store.add(p + "ffn.fc1.w", kaiming_normal(Shape{cfg.ffn_ratio * c, c, 1, 1}, rng));
  store.add(p + "ffn.fc1.b", Tensor(Shape{1, 1, 1, cfg.ffn_ratio * c}));
  store.add(p + "ffn.fc2.w", kaiming_normal(Shape{c, cfg.ffn_ratio * c, 1, 1}, rng, 0.5));
  store.add(p + "ffn.fc2.b", Tensor(Shape{1, 1, 1, c}));
}

// Per-call diagnostics.
struct IwsaTrace {
  std::vector<std::vector<Tensor>> attention;  // [head][batch] -> [Tq, Tk]
  int query_tokens = 0;
  int key_tokens = 0;
};

// Contiguous channel pieces of equal width.
inline std::vector<Var> decompose(const Var& x, int heads) {
  const int c = x.shape().c;
  require(heads >= 1 && c % heads == 0, ErrorKind::dimension, "decompose: C=", c, " not divisible by ", heads);
  std::vector<Var> pieces;
  const int pd = c / heads;
  for (int i = 0; i < heads; ++i) pieces.push_back(ag::slice_channels(x, i * pd, pd));
  return pieces;
}

inline std::vector<Tensor> decompose(const Tensor& x, int heads) {
  Tape tape;
  std::vector<Tensor> out;
  for (const Var& v : decompose(tape.leaf(Tensor(x.shape(), x.values())), heads)) out.push_back(v.value());
  return out;
}

// phi(X): 1x1 conv to the query width, as a map [N, qk, H, W].
inline Var shared_query(Binding& b, const std::string& p, const Var& x) {
  return ag::conv2d(x, b(p + "attn.query.w"), b(p + "attn.query.b"));
}

// Gains [N, n*v, 1, 1]. The conv is 1x1 and therefore commutes with global
// average pooling, so pooling runs first: GAP(conv(Y)) == conv(GAP(Y)).
inline Var support_value(Binding& b, const std::string& p, const Var& y) {
  return ag::conv2d(ag::global_avg_pool(y), b(p + "support.w"), b(p + "support.b"));
}

// Flattens a query map [N, qk, H, W] into tokens [N, 1, H*W, qk].
inline Tensor query_tokens(const Tensor& qmap) {
  const Shape s = qmap.shape();
  const int t = s.h * s.w;
  Tensor out(Shape{s.n, 1, t, s.c});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < t; ++i) out.at(n, 0, i, c) = qmap.plane(n, c)[i];
  return out;
}

inline Var iwsa(Binding& b, const std::string& p, const EwtbConfig& cfg, const Var& x,
                const std::optional<Var>& y, IwsaTrace* trace = nullptr) {
  cfg.validate();
  const Shape s = x.shape();
  require(s.c == cfg.dim, ErrorKind::dimension, "iwsa: input has ", s.c, " channels, block expects ", cfg.dim);
  require(s.h % 2 == 0 && s.w % 2 == 0, ErrorKind::dimension, "iwsa: spatial dims must be even, got ", s.h, "x", s.w);
  const int n = cfg.heads, v = cfg.v_dim();
  const int pad = cfg.refine_kernel / 2;

  const Var q = shared_query(b, p, x);
  std::optional<Var> gains;
  if (y.has_value()) {
    require(cfg.support_channels > 0, ErrorKind::config, "iwsa: support feature given but block has no support path");
    gains = support_value(b, p, *y);
  }
  if (trace != nullptr) {
    trace->attention.assign(n, {});
    trace->query_tokens = s.h * s.w;
    trace->key_tokens = (s.h / 2) * (s.w / 2);
  }

  std::vector<Var> pieces = decompose(x, n);
  std::vector<Var> heads;
  for (int i = 0; i < n; ++i) {
    using ewtb_names::head;
    Var piece = pieces[i];
    if (i > 0) {
      const Var& prev = heads.back();
      piece = ag::add(piece, ag::conv2d(prev, b(head(p, i - 1, "cascade.w")), b(head(p, i - 1, "cascade.b"))));
    }
    const Var bands = ag::dwt2(piece);
    const Var key = ag::conv2d(bands, b(head(p, i, "key.w")), nullptr);
    Var value = ag::conv2d(bands, b(head(p, i, "value.w")), nullptr);
    if (gains) value = ag::mul_channel(value, ag::slice_channels(*gains, i * v, v));
    const Var attended = ag::attention(q, key, value, trace != nullptr ? &trace->attention[i] : nullptr);
    const Var refined = ag::conv2d(bands, b(head(p, i, "refine.w")), b(head(p, i, "refine.b")), ConvSpec{1, pad, 1});
    heads.push_back(ag::add(attended, ag::idwt2(refined)));
  }
  return ag::conv2d(ag::concat_channels(heads), b(p + "attn.proj.w"), b(p + "attn.proj.b"));
}

// X~ = X + IWSA(LN(X), Y); out = X~ + FFN(LN(X~)).
inline Var ewtb_forward(Binding& b, const std::string& p, const EwtbConfig& cfg, const Var& x,
                        const std::optional<Var>& y, IwsaTrace* trace = nullptr) {
  const Var attn = iwsa(b, p, cfg, ag::layer_norm(x, b(p + "ln1.gamma"), b(p + "ln1.beta"), cfg.ln_eps), y, trace);
  const Var mid = ag::add(x, attn);
  const Var norm = ag::layer_norm(mid, b(p + "ln2.gamma"), b(p + "ln2.beta"), cfg.ln_eps);
  const Var hidden = ag::gelu(ag::conv2d(norm, b(p + "ffn.fc1.w"), b(p + "ffn.fc1.b")));
  return ag::add(mid, ag::conv2d(hidden, b(p + "ffn.fc2.w"), b(p + "ffn.fc2.b")));
}

// Tensor-level entry points (no gradients recorded).
inline Tensor iwsa(const Tensor& x, const std::optional<Tensor>& y, const ParamStore& params, const std::string& p,
                   const EwtbConfig& cfg, IwsaTrace* trace = nullptr) {
  Tape tape;
  Binding b(tape, params, false);
  std::optional<Var> yv;
  if (y) yv = tape.leaf(*y);
  return iwsa(b, p, cfg, tape.leaf(x), yv, trace).value();
}

inline Tensor ewtb_forward(const Tensor& x, const std::optional<Tensor>& y, const ParamStore& params,
                           const std::string& p, const EwtbConfig& cfg, IwsaTrace* trace = nullptr) {
  Tape tape;
  Binding b(tape, params, false);
  std::optional<Var> yv;
  if (y) yv = tape.leaf(*y);
  return ewtb_forward(b, p, cfg, tape.leaf(x), yv, trace).value();
}

inline Tensor shared_query(const Tensor& x, const ParamStore& params, const std::string& p) {
  Tape tape;
  Binding b(tape, params, false);
  return query_tokens(shared_query(b, p, tape.leaf(x)).value());
}

inline Tensor support_value(const Tensor& y, const ParamStore& params, const std::string& p) {
  Tape tape;
  Binding b(tape, params, false);
  return support_value(b, p, tape.leaf(y)).value();
}

}  // namespace ffrt
