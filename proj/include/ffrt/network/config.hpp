#pragma once

#include <string>
#include <vector>

#include "ffrt/ewtb/ewtb.hpp"

namespace ffrt {

enum class AttentionKind { iwsa, vanilla };

inline std::string to_string(AttentionKind k) { return k == AttentionKind::iwsa ? "iwsa" : "vanilla"; }

struct ModelConfig {
  int input_h = 224;
  int input_w = 224;
  int stem_conv_channels = 16;  // first stride-2 conv
  std::vector<int> stem_channels{64, 128, 128};  // residual blocks at 1/4, 1/8, 1/16
  std::vector<int> cognitive_channels{128, 256, 384};  // one entry per stage
  int inspective_channels = 128;
  int heads = 4;
  int ffn_ratio = 6;
  int value_ratio = 1;  // per-head value width as a multiple of the piece width
  int refine_kernel = 1;
  int head_channels = 16;  // hidden width of each detection head
  AttentionKind attention = AttentionKind::iwsa;

  int stages() const { return static_cast<int>(cognitive_channels.size()); }

  // Deepest cognitive scale is 1 / (16 * 2^(stages - 1)).
  int size_multiple() const { return 16 << (stages() - 1); }
  int padded_h() const { return round_up(input_h); }
  int padded_w() const { return round_up(input_w); }

  EwtbConfig stage_block(int i) const {
    EwtbConfig c;
    c.dim = cognitive_channels.at(static_cast<std::size_t>(i));
    c.heads = heads;
    c.value_dim = value_ratio * (c.dim / heads);
    c.ffn_ratio = ffn_ratio;
    c.support_channels = inspective_channels;
    c.refine_kernel = refine_kernel;
    return c;
  }

  void validate() const {
    require(stages() >= 2, ErrorKind::config, "model: at least 2 cognitive stages required, got ", stages());
    require(stem_channels.size() == 3, ErrorKind::config, "model: stem needs exactly 3 block widths");
    require(input_h >= 1 && input_w >= 1, ErrorKind::config, "model: input size must be positive");
    require(stem_conv_channels >= 1 && inspective_channels >= 1 && head_channels >= 1, ErrorKind::config,
            "model: channel widths must be positive");
    for (int c : stem_channels) require(c >= 1, ErrorKind::config, "model: stem widths must be positive");
    require(value_ratio >= 1, ErrorKind::config, "model: value_ratio must be >= 1");
    for (int i = 0; i < stages(); ++i) stage_block(i).validate();
  }

  // Every width divided by `divisor` (heads kept).
  ModelConfig scaled(int divisor) const {
    require(divisor >= 1, ErrorKind::config, "model: width divisor must be >= 1");
    ModelConfig c = *this;
    auto div = [divisor](int v) { return std::max(1, v / divisor); };
    c.stem_conv_channels = div(stem_conv_channels);
    for (auto& v : c.stem_channels) v = div(v);
    for (auto& v : c.cognitive_channels) v = div(v);
    c.inspective_channels = div(inspective_channels);
    c.head_channels = div(head_channels);
    return c;
  }

 private:
  int round_up(int v) const {
    const int m = size_multiple();
    return (v + m - 1) / m * m;
  }
};

}  // namespace ffrt
