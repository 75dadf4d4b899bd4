#pragma once

// Run configuration. Text format: one `key = value` per line, dotted keys,
// '#' starts a comment. Unknown keys are rejected.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ffrt/data/degrade.hpp"
#include "ffrt/data/pnm.hpp"
#include "ffrt/network/config.hpp"
#include "ffrt/numerics/adamw.hpp"
#include "ffrt/supervision/loss.hpp"

namespace ffrt {

struct OptimizerConfig {
  double lr = 1e-4;
  double lr_final = 1e-5;  // linear decay over the run
  double weight_decay = 0.025;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-draw random transform of training items.
enum class Augment { none, flip, dihedral };

inline std::string to_string(Augment a) {
  switch (a) {
    case Augment::none: return "none";
    case Augment::flip: return "flip";
    case Augment::dihedral: return "dihedral";
  }
  return "?";
}

struct TrainConfig {
  int batch_size = 8;
  int steps = 2000;
  int log_every = 50;
  int checkpoint_every = 0;  // 0 = only at the end
  int eval_every = 0;  // training-set F1 in the log; 0 = only at the end
  Augment augment = Augment::dihedral;
  bool color_augment = true;  // random channel order and intensity inversion
};

struct DataConfig {
  std::string manifest;  // empty = synthesize in memory
  std::string eval_manifest;
  int train_count = 32;
  int eval_count = 64;
  int height = 64;
  int width = 64;
  std::uint64_t train_seed = 1;
  std::uint64_t eval_seed = 2;
  int authentic_every = 0;
};

struct SweepConfig {
  std::vector<double> gaussian_blur;
  std::vector<double> gaussian_noise;
  std::vector<double> resize;
  std::vector<double> jpeg_like;

  bool empty() const { return gaussian_blur.empty() && gaussian_noise.empty() && resize.empty() && jpeg_like.empty(); }
};

struct EvalConfig {
  double threshold = 0.5;
  SweepConfig sweep;
};

struct BenchConfig {
  std::vector<double> sizes{64, 128};
  int repeats = 5;
  int warmup = 1;
};

struct AnalyzeConfig {
  double min_fraction = 0.8;
  int count = 200;
};

struct RunConfig {
  ModelConfig model;
  int width_divisor = 2;  // applied to every model width
  OptimizerConfig optimizer;
  TrainConfig train;
  LossWeights loss;
  DataConfig data;
  EvalConfig eval;
  BenchConfig bench;
  AnalyzeConfig analyze;
  std::uint64_t seed = 1;

  // Model widths after the divisor; input size taken from the data section.
  ModelConfig effective_model() const {
    ModelConfig m = model.scaled(width_divisor);
    m.input_h = data.height;
    m.input_w = data.width;
    return m;
  }

  AdamWHyper adamw() const {
    return AdamWHyper{optimizer.lr, optimizer.beta1, optimizer.beta2, optimizer.eps, optimizer.weight_decay};
  }

  double lr_at(int step) const {
    if (train.steps <= 1) return optimizer.lr;
    const double t = static_cast<double>(step) / static_cast<double>(train.steps - 1);
    return optimizer.lr + (optimizer.lr_final - optimizer.lr) * t;
  }

  void validate() const;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && p == text.data() + text.size(), ErrorKind::config, "config: bad value '", text,
          "' for ", key);
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  fail(ErrorKind::config, "config: bad boolean '", text, "' for ", key);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i)
    if (i == text.size() || text[i] == ',') {
      out.push_back(parse_number<T>(key, trim(text.substr(start, i - start))));
      start = i + 1;
    }
  return out;
}

template <typename T>
std::string format_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

template <typename T>
Field num(std::string key, T& ref) {
  return {key,
          [&ref] {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(ref);
            else
              return std::to_string(ref);
          },
          [&ref, key](const std::string& s) { ref = parse_number<T>(key, s); }};
}

template <typename T>
Field list(std::string key, std::vector<T>& ref) {
  return {key, [&ref] { return format_list(ref); }, [&ref, key](const std::string& s) { ref = parse_list<T>(key, s); }};
}

inline Field flag(std::string key, bool& ref) {
  return {key, [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref, key](const std::string& s) { ref = parse_bool(key, s); }};
}

inline Field text(std::string key, std::string& ref) {
  return {key, [&ref] { return ref; }, [&ref](const std::string& s) { ref = s; }};
}

// Every key in canonical order.
inline std::vector<Field> fields(RunConfig& c) {
  auto& m = c.model;
  return {
      num("seed", c.seed),
      num("model.width_divisor", c.width_divisor),
      num("model.stem_conv_channels", m.stem_conv_channels),
      list("model.stem_channels", m.stem_channels),
      list("model.cognitive_channels", m.cognitive_channels),
      num("model.inspective_channels", m.inspective_channels),
      num("model.heads", m.heads),
      num("model.ffn_ratio", m.ffn_ratio),
      num("model.value_ratio", m.value_ratio),
      num("model.refine_kernel", m.refine_kernel),
      num("model.head_channels", m.head_channels),
      {"model.attention", [&m] { return to_string(m.attention); },
       [&m](const std::string& s) {
         if (s == "iwsa") m.attention = AttentionKind::iwsa;
         else if (s == "vanilla") m.attention = AttentionKind::vanilla;
         else fail(ErrorKind::config, "config: model.attention must be iwsa or vanilla, got '", s, "'");
       }},
      num("optimizer.lr", c.optimizer.lr),
      num("optimizer.lr_final", c.optimizer.lr_final),
      num("optimizer.weight_decay", c.optimizer.weight_decay),
      num("optimizer.beta1", c.optimizer.beta1),
      num("optimizer.beta2", c.optimizer.beta2),
      num("optimizer.eps", c.optimizer.eps),
      num("train.batch_size", c.train.batch_size),
      num("train.steps", c.train.steps),
      num("train.log_every", c.train.log_every),
      num("train.checkpoint_every", c.train.checkpoint_every),
      num("train.eval_every", c.train.eval_every),
      {"train.augment", [&c] { return to_string(c.train.augment); },
       [&c](const std::string& s) {
         if (s == "none") c.train.augment = Augment::none;
         else if (s == "flip") c.train.augment = Augment::flip;
         else if (s == "dihedral") c.train.augment = Augment::dihedral;
         else fail(ErrorKind::config, "config: train.augment must be none, flip or dihedral, got '", s, "'");
       }},
      flag("train.color_augment", c.train.color_augment),
      num("loss.ce", c.loss.ce),
      num("loss.bry", c.loss.bry),
      num("loss.pos", c.loss.pos),
      text("data.manifest", c.data.manifest),
      text("data.eval_manifest", c.data.eval_manifest),
      num("data.train_count", c.data.train_count),
      num("data.eval_count", c.data.eval_count),
      num("data.height", c.data.height),
      num("data.width", c.data.width),
      num("data.train_seed", c.data.train_seed),
      num("data.eval_seed", c.data.eval_seed),
      num("data.authentic_every", c.data.authentic_every),
      num("eval.threshold", c.eval.threshold),
      list("eval.sweep.gaussian_blur", c.eval.sweep.gaussian_blur),
      list("eval.sweep.gaussian_noise", c.eval.sweep.gaussian_noise),
      list("eval.sweep.resize", c.eval.sweep.resize),
      list("eval.sweep.jpeg_like", c.eval.sweep.jpeg_like),
      list("bench.sizes", c.bench.sizes),
      num("bench.repeats", c.bench.repeats),
      num("bench.warmup", c.bench.warmup),
      num("analyze.min_fraction", c.analyze.min_fraction),
      num("analyze.count", c.analyze.count),
  };
}

}  // namespace detail

inline void RunConfig::validate() const {
  require(width_divisor >= 1, ErrorKind::config, "model.width_divisor must be >= 1");
  const ModelConfig m = effective_model();
  m.validate();
  require(optimizer.lr >= 0.0 && optimizer.lr_final >= 0.0, ErrorKind::config, "optimizer.lr must be >= 0");
  require(optimizer.weight_decay >= 0.0, ErrorKind::config, "optimizer.weight_decay must be >= 0");
  require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0,
          ErrorKind::config, "optimizer betas must lie in [0, 1)");
  require(optimizer.eps > 0.0, ErrorKind::config, "optimizer.eps must be > 0");
  require(train.batch_size >= 1 && train.steps >= 0 && train.log_every >= 1 && train.checkpoint_every >= 0 &&
              train.eval_every >= 0,
          ErrorKind::config, "train: batch_size/log_every must be >= 1, steps/checkpoint_every/eval_every >= 0");
  loss.validate();
  require(data.train_count >= 1 && data.eval_count >= 1, ErrorKind::config, "data counts must be >= 1");
  require(data.height >= 32 && data.width >= 32, ErrorKind::config, "data size must be at least 32x32");
  require(eval.threshold > 0.0 && eval.threshold < 1.0, ErrorKind::config, "eval.threshold must lie in (0, 1)");
  const auto check = [](DegradationKind k, const std::vector<double>& ps) {
    for (double p : ps) DegradationSpec{k, p}.validate();
  };
  check(DegradationKind::gaussian_blur, eval.sweep.gaussian_blur);
  check(DegradationKind::gaussian_noise, eval.sweep.gaussian_noise);
  check(DegradationKind::resize, eval.sweep.resize);
  check(DegradationKind::jpeg_like, eval.sweep.jpeg_like);
  require(!bench.sizes.empty() && bench.repeats >= 1 && bench.warmup >= 0, ErrorKind::config,
          "bench: need sizes, repeats >= 1, warmup >= 0");
  for (double s : bench.sizes) require(s >= 32 && s == std::floor(s), ErrorKind::config, "bench.sizes: bad size ", s);
  require(analyze.min_fraction >= 0.0 && analyze.min_fraction <= 1.0 && analyze.count >= 1, ErrorKind::config,
          "analyze: min_fraction in [0, 1] and count >= 1");
}

// Applies one `key = value` assignment.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (auto& f : detail::fields(c))
    if (f.key == key) {
      f.set(value);
      return;
    }
  fail(ErrorKind::config, "config: unknown key '", key, "'");
}

inline RunConfig parse_run_config(const std::string& text, RunConfig base = {}) {
  std::size_t start = 0;
  int lineno = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::config, "config line ", lineno, ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    try {
      set_config_value(base, key, detail::trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorKind::config, "config line ", lineno, ": ", e.what());
    }
  }
  base.validate();
  return base;
}

inline RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

// Canonical text: every key, fixed order; parse_run_config(to_text(c)) == c.
inline std::string to_text(const RunConfig& c) {
  RunConfig copy = c;
  std::string out;
  for (auto& f : detail::fields(copy)) out += f.key + " = " + f.get() + "\n";
  return out;
}

}  // namespace ffrt
