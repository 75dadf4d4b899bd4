#pragma once

// Analytic cost model. Counts multiply-accumulates of convolutions,
// attention products and wavelet transforms; FLOPs are 2 x MACs.
// Elementwise work (activations, norms, softmax, residual adds, resizes)
// is not counted.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ffrt/network/config.hpp"

namespace ffrt {

struct FlopRow {
  std::string module;
  std::int64_t macs = 0;
  std::int64_t params = 0;
};

struct FlopReport {
  int input_h = 0;   // requested size
  int input_w = 0;
  int padded_h = 0;  // size actually run
  int padded_w = 0;
  std::vector<FlopRow> rows;

  std::int64_t total_macs() const {
    std::int64_t s = 0;
    for (const auto& r : rows) s += r.macs;
    return s;
  }
  std::int64_t total_flops() const { return 2 * total_macs(); }
  std::int64_t params() const {
    std::int64_t s = 0;
    for (const auto& r : rows) s += r.params;
    return s;
  }
  // FLOPs rescaled from the padded size to the requested area.
  double reported_flops() const {
    return static_cast<double>(total_flops()) * (static_cast<double>(input_h) * input_w) /
           (static_cast<double>(padded_h) * padded_w);
  }
  const FlopRow* find(const std::string& module) const {
    for (const auto& r : rows)
      if (r.module == module) return &r;
    return nullptr;
  }
};

namespace detail {

class CostAccumulator {
 public:
  void conv(const std::string& module, int cin, int cout, int k, int groups, int out_h, int out_w, bool bias) {
    auto& r = row(module);
    r.macs += static_cast<std::int64_t>(cout) * (cin / groups) * k * k * out_h * out_w;
    r.params += static_cast<std::int64_t>(cout) * (cin / groups) * k * k + (bias ? cout : 0);
  }
  void macs(const std::string& module, std::int64_t m) { row(module).macs += m; }
  void params(const std::string& module, std::int64_t p) { row(module).params += p; }

  std::vector<FlopRow> take() { return std::move(rows_); }

 private:
  FlopRow& row(const std::string& module) {
    for (auto& r : rows_)
      if (r.module == module) return r;
    rows_.push_back({module, 0, 0});
    return rows_.back();
  }
  std::vector<FlopRow> rows_;
};

inline void count_block(CostAccumulator& acc, const std::string& name, const EwtbConfig& cfg, AttentionKind kind,
                        int h, int w) {
  const int c = cfg.dim, n = cfg.heads, pd = cfg.piece_dim(), v = cfg.v_dim(), qk = cfg.qk_dim();
  const std::int64_t t = static_cast<std::int64_t>(h) * w;
  const std::int64_t tk = t / 4;
  const std::string attn = name + ".attn";
  acc.params(name + ".norm", 4LL * c);
  if (kind == AttentionKind::iwsa) {
    acc.conv(attn, c, qk, 1, 1, h, w, true);
    for (int i = 0; i < n; ++i) {
      if (i > 0) acc.conv(attn, v, pd, 1, 1, h, w, true);
      acc.macs(attn, 2LL * pd * t);                                // dwt
      acc.conv(attn, 4 * pd, qk, 1, 1, h / 2, w / 2, false);       // keys
      acc.conv(attn, 4 * pd, v, 1, 1, h / 2, w / 2, false);        // values
      acc.macs(attn, t * tk * (qk + v));                           // QK^T and AV
      acc.conv(attn, 4 * pd, 4 * v, cfg.refine_kernel, 1, h / 2, w / 2, true);
      acc.macs(attn, 2LL * v * t);                                 // idwt
    }
    acc.conv(attn, n * v, c, 1, 1, h, w, true);
    if (cfg.support_channels > 0) acc.conv(name + ".support", cfg.support_channels, n * v, 1, 1, 1, 1, true);
  } else {
    acc.conv(attn, c, 3 * c, 1, 1, h, w, false);  // per-head Q, K, V from the full input
    acc.macs(attn, 2 * t * t * c);
    acc.conv(attn, c, c, 1, 1, h, w, true);
  }
  acc.conv(name + ".ffn", c, cfg.ffn_ratio * c, 1, 1, h, w, true);
  acc.conv(name + ".ffn", cfg.ffn_ratio * c, c, 1, 1, h, w, true);
}

inline void count_residual(CostAccumulator& acc, const std::string& name, int cin, int cout, int stride, int& h,
                           int& w) {
  const int oh = conv_out_dim(h, 3, ConvSpec{stride, 1, 1});
  const int ow = conv_out_dim(w, 3, ConvSpec{stride, 1, 1});
  acc.conv(name, cin, cout, 3, 1, oh, ow, true);
  acc.conv(name, cout, cout, 3, 1, oh, ow, true);
  if (cin != cout || stride != 1) acc.conv(name, cin, cout, 1, 1, oh, ow, true);
  h = oh;
  w = ow;
}

}  // namespace detail

// Cost of one cognitive block at an (even) spatial size.
inline FlopReport count_block_flops(const EwtbConfig& cfg, AttentionKind kind, int h, int w) {
  detail::CostAccumulator acc;
  detail::count_block(acc, "block", cfg, kind, h, w);
  FlopReport r;
  r.input_h = r.padded_h = h;
  r.input_w = r.padded_w = w;
  r.rows = acc.take();
  return r;
}

inline FlopReport count_flops(const ModelConfig& cfg, int input_h, int input_w) {
  cfg.validate();
  ModelConfig sized = cfg;
  sized.input_h = input_h;
  sized.input_w = input_w;
  int h = sized.padded_h(), w = sized.padded_w();
  FlopReport report;
  report.input_h = input_h;
  report.input_w = input_w;
  report.padded_h = h;
  report.padded_w = w;

  detail::CostAccumulator acc;
  const ConvSpec s2{2, 1, 1};
  const auto& sc = cfg.stem_channels;
  h = conv_out_dim(h, 3, s2), w = conv_out_dim(w, 3, s2);
  acc.conv("stem", 3, cfg.stem_conv_channels, 3, 1, h, w, true);
  h = conv_out_dim(h, 3, s2), w = conv_out_dim(w, 3, s2);
  acc.conv("stem", cfg.stem_conv_channels, sc[0], 3, 1, h, w, true);
  detail::count_residual(acc, "stem", sc[0], sc[0], 1, h, w);
  detail::count_residual(acc, "stem", sc[0], sc[1], 2, h, w);
  const int h8 = h, w8 = w;
  detail::count_residual(acc, "stem", sc[1], sc[2], 2, h, w);

  const int iw = cfg.inspective_channels;
  if (sc[1] != iw) acc.conv("inspective", sc[1], iw, 1, 1, h8, w8, true);
  if (sc[2] != cfg.cognitive_channels[0]) acc.conv("cognitive.input", sc[2], cfg.cognitive_channels[0], 1, 1, h, w, true);
  for (int i = 0; i < cfg.stages(); ++i) {
    int ih = h8, iwd = w8;
    detail::count_residual(acc, "inspective", iw, iw, 1, ih, iwd);
    const std::string name = "cognitive.stage" + std::to_string(i);
    detail::count_block(acc, name, cfg.stage_block(i), cfg.attention, h + h % 2, w + w % 2);
    acc.conv("fusion", cfg.cognitive_channels[i], iw, 1, 1, h, w, true);
    if (i + 1 < cfg.stages()) {
      const int oh = conv_out_dim(h, 3, s2), ow = conv_out_dim(w, 3, s2);
      acc.conv("cognitive.down", cfg.cognitive_channels[i], cfg.cognitive_channels[i + 1], 3, 1, oh, ow, true);
      h = oh;
      w = ow;
    }
  }
  for (const char* head : {"mask", "boundary", "offset"}) {
    acc.conv(std::string("head.") + head, iw, cfg.head_channels, 3, 1, h8, w8, true);
    acc.conv(std::string("head.") + head, cfg.head_channels, 2, 1, 1, h8, w8, true);
  }
  report.rows = acc.take();
  return report;
}

inline std::int64_t count_params(const ModelConfig& cfg) { return count_flops(cfg, cfg.input_h, cfg.input_w).params(); }

}  // namespace ffrt
