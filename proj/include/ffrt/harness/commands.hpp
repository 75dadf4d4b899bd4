#pragma once

// Command implementations behind the CLI. Each returns a JSON report with a
// stable key order; reports from train/eval/analyze carry no timestamps or
// timings so identical runs give identical bytes.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ffrt/harness/evaluate.hpp"
#include "ffrt/harness/gradsuite.hpp"
#include "ffrt/harness/train.hpp"
#include "ffrt/network/flops.hpp"
#include "ffrt/wavelet/frequency.hpp"

namespace ffrt {

using Json = nlohmann::ordered_json;

// Reference figures for the full-width model at 224x224.
inline constexpr double kReferenceParams = 8.36e6;
inline constexpr double kReferenceFlops = 2.16e9;
inline constexpr double kParamTolerance = 0.20;
inline constexpr double kFlopTolerance = 0.30;

inline Json environment_stamp() {
  Json j;
#if defined(__clang__)
  j["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  j["compiler"] = std::string("gcc ") + __VERSION__;
#else
  j["compiler"] = "unknown";
#endif
  j["cplusplus"] = __cplusplus;
#ifdef NDEBUG
  j["assertions"] = false;
#else
  j["assertions"] = true;
#endif
  j["precision"] = "f64";
  j["threads"] = 1;
  return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline Json to_json(const LossBreakdown& l) {
  return Json{{"total", l.total}, {"ce", l.ce}, {"bry", l.bry}, {"pos", l.pos}};
}

inline Json to_json(const EvalSummary& s, bool with_items = true) {
  Json j;
  j["condition"] = s.condition;
  j["mean_f1"] = s.mean_f1;
  j["mean_auc"] = s.mean_auc;
  j["count"] = s.items.size();
  j["auc_count"] = s.auc_count;
  Json by_type = Json::object();
  for (auto t : {ManipulationType::authentic, ManipulationType::splice, ManipulationType::copy_move,
                 ManipulationType::removal}) {
    double f = 0.0;
    std::size_t n = 0;
    for (const auto& m : s.items)
      if (m.type == t) {
        f += m.f1;
        ++n;
      }
    if (n > 0) by_type[to_string(t)] = Json{{"count", n}, {"mean_f1", f / static_cast<double>(n)}};
  }
  j["by_type"] = by_type;
  if (with_items) {
    Json items = Json::array();
    for (const auto& m : s.items)
      items.push_back(Json{{"id", m.id}, {"type", to_string(m.type)}, {"f1", m.f1},
                           {"auc", m.auc ? Json(*m.auc) : Json(nullptr)}});
    j["items"] = items;
  }
  return j;
}

inline Json to_json(const FlopReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back(Json{{"module", row.module}, {"macs", row.macs}, {"flops", 2 * row.macs}, {"params", row.params}});
  return Json{{"input", {r.input_h, r.input_w}},
              {"padded", {r.padded_h, r.padded_w}},
              {"params", r.params()},
              {"flops_padded", r.total_flops()},
              {"flops", r.reported_flops()},
              {"modules", rows}};
}

inline Json errors_json(const std::vector<DatasetError>& errors) {
  Json e = Json::array();
  for (const auto& err : errors) e.push_back(Json{{"id", err.id}, {"message", err.message}});
  return e;
}

// ---- synth --------------------------------------------------------------

inline Json cmd_synth(const RunConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  Json j;
  for (const auto& [name, count, seed] : {std::tuple{"train", cfg.data.train_count, cfg.data.train_seed},
                                          std::tuple{"eval", cfg.data.eval_count, cfg.data.eval_seed}}) {
    const Dataset d =
        synth_dataset(static_cast<std::size_t>(count), seed, cfg.data.height, cfg.data.width, cfg.data.authentic_every);
    write_corpus(out / name, d.samples);
    j[name] = Json{{"manifest", (std::filesystem::path(name) / "manifest.tsv").generic_string()},
                   {"count", d.samples.size()}};
  }
  j["environment"] = environment_stamp();
  write_json(out / "synth_report.json", j);
  return j;
}

// ---- train --------------------------------------------------------------

struct TrainOptions {
  std::optional<std::filesystem::path> resume;  // checkpoint to continue from
  std::ostream* log = nullptr;
  // Stop after this many total steps (simulated interruption); the run still
  // writes its checkpoint. Negative = run to train.steps.
  int stop_at = -1;
};

inline const char* kCheckpointName = "checkpoint.ffrt";
inline const char* kLastGoodName = "checkpoint.last_good.ffrt";

// Trains, writing `checkpoint.ffrt` every checkpoint_every steps and at the
// end, plus `train_report.json`. A non-finite loss saves the last good state
// to `checkpoint.last_good.ffrt` and rethrows the numeric error.
inline Json cmd_train(const RunConfig& cfg, const std::filesystem::path& out, const TrainOptions& opt = {}) {
  cfg.validate();
  std::filesystem::create_directories(out);
  const Dataset train = train_dataset(cfg);
  require(train.errors.empty(), ErrorKind::parse, "training manifest has ", train.errors.size(),
          " bad entries; first: ", train.errors.empty() ? "" : train.errors[0].message);
  require(!train.samples.empty(), ErrorKind::parse, "training set is empty");
  Trainer trainer(cfg, train.samples);
  Json steps = Json::array();
  if (opt.resume) {
    const Checkpoint ck = load_checkpoint(*opt.resume);
    require(ck.config == to_text(cfg), ErrorKind::config, "checkpoint '", opt.resume->string(),
            "' was written with a different config");
    trainer.resume(ck);
    // Earlier log rows live in the report next to the checkpoint, if any.
    const auto prev = opt.resume->parent_path() / "train_report.json";
    if (std::filesystem::exists(prev)) {
      const Json p = Json::parse(read_file(prev));
      for (const auto& row : p.at("steps"))
        if (row.at("step").get<int>() <= trainer.step()) steps.push_back(row);
    }
  }
  auto say = [&](const std::string& line) {
    if (opt.log) *opt.log << line << std::endl;
  };
  auto save = [&](const std::filesystem::path& p) { save_checkpoint(p, trainer.checkpoint()); };

  const int last = opt.stop_at >= 0 ? std::min(opt.stop_at, cfg.train.steps) : cfg.train.steps;
  while (trainer.step() < last) {
    StepLog s;
    try {
      s = trainer.train_step();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::numeric) {
        save(out / kLastGoodName);
        say("numeric failure at step " + std::to_string(trainer.step() + 1) + ": " + e.what() +
            "; last good state saved to " + (out / kLastGoodName).string());
      }
      throw;
    }
    if (s.step % cfg.train.log_every == 0 || s.step == cfg.train.steps) {
      Json row{{"step", s.step}, {"lr", s.lr}, {"loss", to_json(s.loss)}};
      std::string line = "step " + std::to_string(s.step) + " lr " + detail::format_double(s.lr) + " total " +
                         detail::format_double(s.loss.total) + " ce " + detail::format_double(s.loss.ce) + " bry " +
                         detail::format_double(s.loss.bry) + " pos " + detail::format_double(s.loss.pos);
      if (cfg.train.eval_every > 0 && s.step % cfg.train.eval_every == 0) {
        const double f1 = evaluate(trainer.model(), train, cfg.eval.threshold).mean_f1;
        row["train_f1"] = f1;
        line += " train_f1 " + detail::format_double(f1);
      }
      steps.push_back(row);
      say(line);
    }
    if (cfg.train.checkpoint_every > 0 && s.step % cfg.train.checkpoint_every == 0) save(out / kCheckpointName);
  }
  save(out / kCheckpointName);

  Json j;
  j["config"] = to_text(cfg);
  j["steps_completed"] = trainer.step();
  j["finished"] = trainer.step() == cfg.train.steps;
  const ModelConfig& m = trainer.model_config();
  j["model"] = Json{{"params", count_params(m)}, {"flops", count_flops(m, m.input_h, m.input_w).reported_flops()}};
  j["steps"] = steps;
  if (trainer.step() == cfg.train.steps) {
    const EvalSummary tr = evaluate(trainer.model(), train, cfg.eval.threshold);
    const Dataset held = eval_dataset(cfg);
    const EvalSummary ev = evaluate(trainer.model(), held, cfg.eval.threshold);
    j["train_metrics"] = to_json(tr, false);
    j["heldout_metrics"] = to_json(ev, false);
    say("final train f1 " + detail::format_double(tr.mean_f1) + " auc " + detail::format_double(tr.mean_auc) +
        " | held-out f1 " + detail::format_double(ev.mean_f1) + " auc " + detail::format_double(ev.mean_auc));
  }
  j["checkpoint"] = kCheckpointName;
  j["environment"] = environment_stamp();
  write_json(out / "train_report.json", j);
  return j;
}

// ---- eval ---------------------------------------------------------------

// Rebuilds the model described by a checkpoint's config and loads its weights.
inline Model model_from_checkpoint(const Checkpoint& ck, RunConfig* cfg_out = nullptr) {
  const RunConfig cfg = parse_run_config(ck.config);
  Model m(cfg.effective_model(), 0);
  restore(m.params(), ck.params);
  if (cfg_out) *cfg_out = cfg;
  return m;
}

// Evaluates a checkpoint on the config's eval data (manifest or synthetic),
// with the configured degradation sweep. Bad manifest entries are listed and
// skipped.
inline Json cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                     const std::optional<std::filesystem::path>& out = std::nullopt) {
  cfg.validate();
  const Checkpoint ck = load_checkpoint(checkpoint);
  RunConfig trained;
  const Model model = model_from_checkpoint(ck, &trained);
  const Dataset data = eval_dataset(cfg);
  const ModelConfig& mc = model.config();
  require(mc.input_h > 0, ErrorKind::config, "bad model config in checkpoint");
  Json j;
  j["checkpoint_step"] = ck.loop.step;
  j["errors"] = errors_json(data.errors);
  require(!data.samples.empty(), ErrorKind::parse, "evaluation set is empty (", data.errors.size(), " bad entries)");
  const EvalSummary clean = evaluate(model, data, cfg.eval.threshold);
  j["clean"] = to_json(clean);
  Json curves = Json::array();
  for (const SweepCurve& c : run_sweep(model, data, cfg.eval.threshold, cfg.eval.sweep)) {
    Json pts = Json::array();
    for (std::size_t i = 0; i < c.points.size(); ++i)
      pts.push_back(Json{{"param", c.params[i]}, {"mean_f1", c.points[i].mean_f1}, {"mean_auc", c.points[i].mean_auc}});
    curves.push_back(Json{{"kind", to_string(c.kind)}, {"monotone_f1", c.monotone_f1()}, {"points", pts}});
  }
  j["sweep"] = curves;
  j["sweep_note"] = "degradation ranges are this tool's own choice";
  j["environment"] = environment_stamp();
  if (out) write_json(*out, j);
  return j;
}

// ---- flops --------------------------------------------------------------

// Full-width model at 224x224 against the reference figures, with the
// per-module breakdown and the per-stage comparison against vanilla attention.
inline Json cmd_flops(const RunConfig& cfg, int size = 224) {
  ModelConfig m = cfg.model;  // undivided widths
  m.input_h = m.input_w = size;
  m.validate();
  const FlopReport r = count_flops(m, size, size);
  Json j;
  j["report"] = to_json(r);
  const double p = static_cast<double>(r.params()), f = r.reported_flops();
  j["reference"] = Json{{"params", kReferenceParams}, {"flops", kReferenceFlops}};
  j["params_ratio"] = p / kReferenceParams;
  j["flops_ratio"] = f / kReferenceFlops;
  j["params_within_tolerance"] = std::abs(p / kReferenceParams - 1.0) <= kParamTolerance;
  j["flops_within_tolerance"] = std::abs(f / kReferenceFlops - 1.0) <= kFlopTolerance;
  // Share of each module in the totals, so the deviation can be traced.
  Json share = Json::array();
  for (const auto& row : r.rows)
    share.push_back(Json{{"module", row.module},
                         {"param_share", static_cast<double>(row.params) / p},
                         {"flop_share", 2.0 * static_cast<double>(row.macs) / static_cast<double>(r.total_flops())}});
  j["module_share"] = share;
  Json stages = Json::array();
  int h = m.padded_h() / 16, w = m.padded_w() / 16;
  for (int i = 0; i < m.stages(); ++i) {
    const auto a = count_block_flops(m.stage_block(i), AttentionKind::iwsa, h, w).total_flops();
    const auto b = count_block_flops(m.stage_block(i), AttentionKind::vanilla, h, w).total_flops();
    stages.push_back(Json{{"stage", i}, {"grid", {h, w}}, {"iwsa_flops", a}, {"vanilla_flops", b}, {"iwsa_lower", a < b}});
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  j["stages"] = stages;
  j["note"] = "head count and FFN ratio are not given by the reference; exact equality is not claimed";
  return j;
}

// ---- bench --------------------------------------------------------------

inline Json cmd_bench(const RunConfig& cfg) {
  cfg.validate();
  Json rows = Json::array();
  for (double sd : cfg.bench.sizes) {
    const int size = static_cast<int>(sd);
    ModelConfig mc = cfg.effective_model();
    mc.input_h = mc.input_w = size;
    ModelConfig vc = mc;
    vc.attention = AttentionKind::vanilla;
    const Model model(mc, detail::mix_seed(cfg.seed, 1));
    const Tensor x = detail::uniform_tensor(Shape{1, 3, size, size}, cfg.seed, 0.0, 1.0);
    for (int i = 0; i < cfg.bench.warmup; ++i) (void)model.forward(x);
    std::vector<double> times;
    for (int i = 0; i < cfg.bench.repeats; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)model.forward(x);
      times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    const double median = times.size() % 2 ? times[times.size() / 2]
                                           : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
    const FlopReport fr = count_flops(mc, size, size);
    rows.push_back(Json{{"size", size},
                        {"median_ms", median},
                        {"flops", fr.reported_flops()},
                        {"flops_vanilla", count_flops(vc, size, size).reported_flops()},
                        {"params", fr.params()}});
  }
  return Json{{"rows", rows}, {"note", "latency is machine-relative"}, {"environment", environment_stamp()}};
}

// ---- analyze ------------------------------------------------------------

struct AnalyzeResult {
  Json report;
  bool passed = false;
};

// Frequency statistics over a manifest, or over analyze.count synthetic
// splice/removal samples when no manifest is given.
inline AnalyzeResult cmd_analyze(const RunConfig& cfg, const std::optional<std::filesystem::path>& manifest) {
  cfg.validate();
  Dataset d;
  if (manifest) {
    d = load_dataset(*manifest);
    require(!d.samples.empty() || !d.errors.empty(), ErrorKind::parse, "manifest '", manifest->string(), "' is empty");
  } else {
    CorpusSpec spec;
    spec.count = static_cast<std::size_t>(cfg.analyze.count);
    spec.seed = cfg.seed;
    spec.height = cfg.data.height;
    spec.width = cfg.data.width;
    spec.types = {ManipulationType::splice, ManipulationType::removal};
    d.samples = make_corpus(spec);
    for (std::size_t i = 0; i < d.samples.size(); ++i) d.ids.push_back("synth" + std::to_string(i));
  }
  Json entries = Json::array();
  std::size_t compared = 0, higher = 0, manipulated = 0;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const Sample& s = d.samples[i];
    Json e{{"id", d.ids[i]}, {"type", to_string(s.meta.type)}};
    if (s.mask.empty()) {
      e["skipped"] = "no manipulated pixels";
    } else {
      ++manipulated;
      const RegionFrequencyStats st = frequency_report(s.image, s.mask);
      e["manipulated_detail"] = st.manipulated.energy.detail();
      if (st.reference) {
        e["reference_detail"] = st.reference->energy.detail();
        const bool counts = s.meta.type == ManipulationType::splice || s.meta.type == ManipulationType::removal;
        if (counts) {
          ++compared;
          higher += *st.manipulated_higher();
        }
        e["manipulated_higher"] = *st.manipulated_higher();
      } else {
        e["reference_detail"] = nullptr;
      }
    }
    entries.push_back(e);
  }
  AnalyzeResult r;
  Json& j = r.report;
  j["entries"] = entries;
  j["errors"] = errors_json(d.errors);
  j["manipulated"] = manipulated;
  j["compared"] = compared;
  if (compared == 0) {
    j["fraction_higher"] = nullptr;
    j["note"] = "no splice/removal samples with a reference box; comparison skipped";
    r.passed = true;
  } else {
    const double frac = static_cast<double>(higher) / static_cast<double>(compared);
    j["fraction_higher"] = frac;
    j["min_fraction"] = cfg.analyze.min_fraction;
    r.passed = frac >= cfg.analyze.min_fraction;
  }
  j["passed"] = r.passed;
  j["environment"] = environment_stamp();
  return r;
}

// ---- gradcheck ----------------------------------------------------------

inline AnalyzeResult cmd_gradcheck(bool include_model = true) {
  AnalyzeResult r;
  r.passed = true;
  Json rows = Json::array();
  for (const auto& c : run_grad_suite(include_model)) {
    rows.push_back(Json{{"name", c.name},
                        {"max_rel_error", c.max_rel_error},
                        {"threshold", c.threshold},
                        {"coords", c.coords},
                        {"passed", c.passed()}});
    r.passed = r.passed && c.passed();
  }
  r.report = Json{{"cases", rows}, {"passed", r.passed}};
  return r;
}

}  // namespace ffrt
