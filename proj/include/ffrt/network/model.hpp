#pragma once

// Two-stream manipulation detector.
//
//   image -> stem (1/4, 1/8, 1/16)
//   inspective branch: residual blocks at 1/8, fed from the 1/8 stem feature
//   cognitive branch:  transformer blocks from 1/16, halving resolution per stage
//
// Stages interleave: inspective block i runs, its output supplies the support
// gains of cognitive stage i, and the stage output is projected, upsampled
// and added back into the inspective stream. The three heads read the final
// inspective feature.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ffrt/ewtb/ewtb.hpp"
#include "ffrt/network/config.hpp"

namespace ffrt {

// Multi-head self-attention over all H*W tokens, used as the ablation baseline.
inline void init_vanilla_msa(ParamStore& store, const std::string& p, const EwtbConfig& cfg, std::mt19937_64& rng) {
  const int c = cfg.dim;
  store.add(p + "ln1.gamma", Tensor(Shape{1, 1, 1, c}, 1.0));
  store.add(p + "ln1.beta", Tensor(Shape{1, 1, 1, c}));
  store.add(p + "attn.qkv.w", kaiming_normal(Shape{3 * c, c, 1, 1}, rng, 1.0));
  store.add(p + "attn.proj.w", kaiming_normal(Shape{c, c, 1, 1}, rng, 0.5));
  store.add(p + "attn.proj.b", Tensor(Shape{1, 1, 1, c}));
  store.add(p + "ln2.gamma", Tensor(Shape{1, 1, 1, c}, 1.0));
  store.add(p + "ln2.beta", Tensor(Shape{1, 1, 1, c}));
  store.add(p + "ffn.fc1.w", kaiming_normal(Shape{cfg.ffn_ratio * c, c, 1, 1}, rng));
  store.add(p + "ffn.fc1.b", Tensor(Shape{1, 1, 1, cfg.ffn_ratio * c}));
  store.add(p + "ffn.fc2.w", kaiming_normal(Shape{c, cfg.ffn_ratio * c, 1, 1}, rng, 0.5));
  store.add(p + "ffn.fc2.b", Tensor(Shape{1, 1, 1, c}));
}

inline Var vanilla_block_forward(Binding& b, const std::string& p, const EwtbConfig& cfg, const Var& x) {
  const int c = cfg.dim, n = cfg.heads, d = c / n;
  const Var norm = ag::layer_norm(x, b(p + "ln1.gamma"), b(p + "ln1.beta"), cfg.ln_eps);
  const Var qkv = ag::conv2d(norm, b(p + "attn.qkv.w"), nullptr);
  std::vector<Var> heads;
  for (int i = 0; i < n; ++i)
    heads.push_back(ag::attention(ag::slice_channels(qkv, i * d, d), ag::slice_channels(qkv, c + i * d, d),
                                  ag::slice_channels(qkv, 2 * c + i * d, d)));
  const Var mid = ag::add(x, ag::conv2d(ag::concat_channels(heads), b(p + "attn.proj.w"), b(p + "attn.proj.b")));
  const Var norm2 = ag::layer_norm(mid, b(p + "ln2.gamma"), b(p + "ln2.beta"), cfg.ln_eps);
  const Var hidden = ag::gelu(ag::conv2d(norm2, b(p + "ffn.fc1.w"), b(p + "ffn.fc1.b")));
  return ag::add(mid, ag::conv2d(hidden, b(p + "ffn.fc2.w"), b(p + "ffn.fc2.b")));
}

namespace detail {

inline void add_conv(ParamStore& s, const std::string& p, int cin, int cout, int k, std::mt19937_64& rng,
                     double gain = std::sqrt(2.0)) {
  s.add(p + "w", kaiming_normal(Shape{cout, cin, k, k}, rng, gain));
  s.add(p + "b", Tensor(Shape{1, 1, 1, cout}));
}

inline void add_residual(ParamStore& s, const std::string& p, int cin, int cout, int stride, std::mt19937_64& rng) {
  add_conv(s, p + "a.", cin, cout, 3, rng);
  add_conv(s, p + "b.", cout, cout, 3, rng, 1.0);
  if (cin != cout || stride != 1) add_conv(s, p + "proj.", cin, cout, 1, rng, 1.0);
}

inline Var conv(Binding& b, const std::string& p, const Var& x, const ConvSpec& spec = {}) {
  return ag::conv2d(x, b(p + "w"), b(p + "b"), spec);
}

// relu(conv_b(relu(conv_a(x))) + shortcut(x)); the shortcut is a strided 1x1 conv when shapes change.
inline Var residual(Binding& b, const std::string& p, const Var& x, int stride) {
  const Var h = ag::relu(conv(b, p + "a.", x, ConvSpec{stride, 1, 1}));
  const Var y = conv(b, p + "b.", h, ConvSpec{1, 1, 1});
  const Var skip = b.has(p + "proj.w") ? conv(b, p + "proj.", x, ConvSpec{stride, 0, 1}) : x;
  return ag::relu(ag::add(y, skip));
}

}  // namespace detail

inline std::string stage_prefix(int i) { return "cognitive.stage" + std::to_string(i) + "."; }

inline void init_model(ParamStore& s, const ModelConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const auto& sc = cfg.stem_channels;
  const int iw = cfg.inspective_channels;
  detail::add_conv(s, "stem.conv1.", 3, cfg.stem_conv_channels, 3, rng);
  detail::add_conv(s, "stem.conv2.", cfg.stem_conv_channels, sc[0], 3, rng);
  detail::add_residual(s, "stem.block1.", sc[0], sc[0], 1, rng);
  detail::add_residual(s, "stem.block2.", sc[0], sc[1], 2, rng);
  detail::add_residual(s, "stem.block3.", sc[1], sc[2], 2, rng);
  if (sc[1] != iw) detail::add_conv(s, "inspective.input.", sc[1], iw, 1, rng, 1.0);
  if (sc[2] != cfg.cognitive_channels[0])
    detail::add_conv(s, "cognitive.input.", sc[2], cfg.cognitive_channels[0], 1, rng, 1.0);
  for (int i = 0; i < cfg.stages(); ++i) {
    detail::add_residual(s, "inspective.block" + std::to_string(i) + ".", iw, iw, 1, rng);
    const EwtbConfig bc = cfg.stage_block(i);
    if (cfg.attention == AttentionKind::iwsa)
      init_ewtb(s, stage_prefix(i), bc, rng);
    else
      init_vanilla_msa(s, stage_prefix(i), bc, rng);
    detail::add_conv(s, "fusion" + std::to_string(i) + ".", cfg.cognitive_channels[i], iw, 1, rng, 1.0);
    if (i + 1 < cfg.stages())
      detail::add_conv(s, "cognitive.down" + std::to_string(i) + ".", cfg.cognitive_channels[i],
                       cfg.cognitive_channels[i + 1], 3, rng, 1.0);
  }
  for (const char* head : {"mask", "boundary", "offset"}) {
    const std::string p = std::string("head.") + head + ".";
    detail::add_conv(s, p + "conv1.", iw, cfg.head_channels, 3, rng);
    // Zero output layer: every head starts from constant zero predictions.
    s.add(p + "conv2.w", Tensor(Shape{2, cfg.head_channels, 1, 1}));
    s.add(p + "conv2.b", Tensor(Shape{1, 1, 1, 2}));
  }
}

struct StemFeatures {
  Var f4;
  Var f8;
  Var f16;
};

inline StemFeatures stem_forward(Binding& b, const ModelConfig& cfg, const Var& img) {
  const int m = cfg.size_multiple();
  require(img.shape().c == 3, ErrorKind::dimension, "stem: expected 3 input channels, got ", img.shape().c);
  require(img.shape().h % m == 0 && img.shape().w % m == 0, ErrorKind::dimension, "stem: input ",
          img.shape().h, "x", img.shape().w, " not divisible by ", m);
  const ConvSpec s2{2, 1, 1};
  Var x = ag::relu(detail::conv(b, "stem.conv1.", img, s2));
  x = ag::relu(detail::conv(b, "stem.conv2.", x, s2));
  StemFeatures f;
  f.f4 = detail::residual(b, "stem.block1.", x, 1);
  f.f8 = detail::residual(b, "stem.block2.", f.f4, 2);
  f.f16 = detail::residual(b, "stem.block3.", f.f8, 2);
  return f;
}

struct ForwardOptions {
  bool support = true;  // inspective -> cognitive support gains
  bool fusion = true;   // cognitive -> inspective feature fusion
};

// One cognitive transformer block. Odd grids are zero-padded to even for
// the wavelet split and cropped back afterwards.
inline Var cognitive_block(Binding& b, const ModelConfig& cfg, int i, const Var& x, const std::optional<Var>& y,
                           IwsaTrace* trace = nullptr) {
  const Shape s = x.shape();
  const Var padded = ag::pad(x, s.h % 2, s.w % 2, ag::PadMode::zero);
  const EwtbConfig bc = cfg.stage_block(i);
  const Var out = cfg.attention == AttentionKind::iwsa ? ewtb_forward(b, stage_prefix(i), bc, padded, y, trace)
                                                       : vanilla_block_forward(b, stage_prefix(i), bc, padded);
  return ag::crop(out, s.h, s.w);
}

inline Var cognitive_input(Binding& b, const Var& f16) {
  return b.has("cognitive.input.w") ? detail::conv(b, "cognitive.input.", f16) : f16;
}

inline Var cognitive_down(Binding& b, int i, const Var& x) {
  return detail::conv(b, "cognitive.down" + std::to_string(i) + ".", x, ConvSpec{2, 1, 1});
}

// Runs every cognitive stage given the support features; returns the stage outputs.
inline std::vector<Var> cognitive_forward(Binding& b, const ModelConfig& cfg, const Var& f16,
                                          const std::vector<Var>& support, const ForwardOptions& opt = {}) {
  require(static_cast<int>(support.size()) == cfg.stages(), ErrorKind::config, "cognitive: ", support.size(),
          " support features for ", cfg.stages(), " stages");
  std::vector<Var> outs;
  Var x = cognitive_input(b, f16);
  for (int i = 0; i < cfg.stages(); ++i) {
    const std::optional<Var> y = opt.support ? std::optional<Var>(support[i]) : std::nullopt;
    const Var out = cognitive_block(b, cfg, i, x, y);
    outs.push_back(out);
    if (i + 1 < cfg.stages()) x = cognitive_down(b, i, out);
  }
  return outs;
}

// cognitive stage output -> 1x1 conv -> bilinear to the 1/8 grid -> add.
inline Var fuse(Binding& b, int i, const Var& inspective, const Var& cognitive) {
  const Var proj = detail::conv(b, "fusion" + std::to_string(i) + ".", cognitive);
  const Var up = ag::bilinear_resize(proj, inspective.shape().h, inspective.shape().w);
  require(up.shape() == inspective.shape(), ErrorKind::dimension, "fusion: ", up.shape().str(), " vs ",
          inspective.shape().str());
  return ag::add(inspective, up);
}

inline Var inspective_input(Binding& b, const Var& f8) {
  return b.has("inspective.input.w") ? detail::conv(b, "inspective.input.", f8) : f8;
}

inline Var inspective_block(Binding& b, int i, const Var& x) {
  return detail::residual(b, "inspective.block" + std::to_string(i) + ".", x, 1);
}

// Runs the inspective branch against precomputed cognitive stage outputs.
// Empty entries (invalid Vars) skip the corresponding fusion.
inline Var inspective_forward(Binding& b, const ModelConfig& cfg, const Var& f8, const std::vector<Var>& cognitive,
                              std::vector<Var>* block_outputs = nullptr) {
  require(static_cast<int>(cognitive.size()) == cfg.stages(), ErrorKind::config, "inspective: ", cognitive.size(),
          " cognitive features for ", cfg.stages(), " stages");
  Var x = inspective_input(b, f8);
  for (int i = 0; i < cfg.stages(); ++i) {
    x = inspective_block(b, i, x);
    if (block_outputs != nullptr) block_outputs->push_back(x);
    if (cognitive[i].valid()) x = fuse(b, i, x, cognitive[i]);
  }
  return x;
}

struct HeadOutputs {
  Var mask_logits;      // [N,2,H,W]
  Var boundary_logits;  // [N,2,H,W]
  Var offsets;          // [N,2,H,W], (dx / W, dy / H)
};

struct ForwardTrace {
  std::vector<Tensor> cognitive;   // stage outputs
  std::vector<Tensor> inspective;  // block outputs before fusion
  std::vector<IwsaTrace> attention;
  Tensor final_inspective;
};

inline Var head_forward(Binding& b, const std::string& name, const Var& feat, int out_h, int out_w, int crop_h,
                        int crop_w) {
  const std::string p = "head." + name + ".";
  const Var h = ag::relu(detail::conv(b, p + "conv1.", feat, ConvSpec{1, 1, 1}));
  const Var logits = detail::conv(b, p + "conv2.", h);
  return ag::crop(ag::bilinear_resize(logits, out_h, out_w), crop_h, crop_w);
}

// Full forward on an [N,3,H,W] image in [0,1]. Inputs whose sides are not a
// multiple of cfg.size_multiple() are reflect-padded (bottom/right) and the
// outputs cropped back.
inline HeadOutputs model_forward(Binding& b, const ModelConfig& cfg, const Var& image, const ForwardOptions& opt = {},
                                 ForwardTrace* trace = nullptr) {
  const Shape s = image.shape();
  image.value().require_finite("model input");
  ModelConfig sized = cfg;
  sized.input_h = s.h;
  sized.input_w = s.w;
  const int ph = sized.padded_h(), pw = sized.padded_w();
  Var x = ag::pad(image, ph - s.h, pw - s.w, ag::PadMode::reflect);
  // Center the [0,1] range.
  x = ag::scale(ag::sub(x, b.tape().leaf(Tensor(x.shape(), 0.5))), 4.0);

  const StemFeatures f = stem_forward(b, cfg, x);
  Var insp = inspective_input(b, f.f8);
  Var cog = cognitive_input(b, f.f16);
  if (trace != nullptr) *trace = ForwardTrace{};
  for (int i = 0; i < cfg.stages(); ++i) {
    insp = inspective_block(b, i, insp);
    IwsaTrace* at = nullptr;
    if (trace != nullptr) {
      trace->inspective.push_back(insp.value());
      trace->attention.emplace_back();
      at = &trace->attention.back();
    }
    const std::optional<Var> y = opt.support ? std::optional<Var>(insp) : std::nullopt;
    const Var out = cognitive_block(b, cfg, i, cog, y, at);
    if (trace != nullptr) trace->cognitive.push_back(out.value());
    if (opt.fusion) insp = fuse(b, i, insp, out);
    if (i + 1 < cfg.stages()) cog = cognitive_down(b, i, out);
  }
  if (trace != nullptr) trace->final_inspective = insp.value();
  HeadOutputs h;
  h.mask_logits = head_forward(b, "mask", insp, ph, pw, s.h, s.w);
  h.boundary_logits = head_forward(b, "boundary", insp, ph, pw, s.h, s.w);
  h.offsets = head_forward(b, "offset", insp, ph, pw, s.h, s.w);
  return h;
}

struct ModelOutput {
  Tensor mask_logits;
  Tensor boundary_logits;
  Tensor offsets;  // pixels at full resolution, channel 0 = x, channel 1 = y
};

// Converts normalized offsets (fractions of the image side) to pixels.
inline Tensor offsets_to_pixels(const Tensor& normalized) {
  const Shape s = normalized.shape();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double side = c == 0 ? s.w : s.h;
      const double* in = normalized.plane(n, c);
      double* o = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) o[i] = in[i] * side;
    }
  return out;
}

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    std::mt19937_64 rng(seed);
    init_model(params_, cfg_, rng);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  ModelOutput forward(const Tensor& image, const ForwardOptions& opt = {}, ForwardTrace* trace = nullptr) const {
    Tape tape;
    Binding b(tape, params_, false);
    const HeadOutputs h = model_forward(b, cfg_, tape.leaf(image), opt, trace);
    return {h.mask_logits.value(), h.boundary_logits.value(), offsets_to_pixels(h.offsets.value())};
  }

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

}  // namespace ffrt
