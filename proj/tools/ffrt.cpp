// Command-line front end. Exit codes: 0 ok, 1 usage or config, 2 data, 3 numeric
// failure or failed check.

#include <CLI11.hpp>

#include <iostream>

#include "ffrt/harness/commands.hpp"

using namespace ffrt;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Run config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the run seed");
  cmd->add_option("--set", c.sets, "Override a config key: --set optimizer.lr=3e-4 (repeatable)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos, ErrorKind::config, "--set expects key=value, got '", s, "'");
    set_config_value(cfg, detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::numeric: return 3;
    case ErrorKind::config:
    case ErrorKind::parameter: return 1;
    default: return 2;
  }
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ffrt: frequency-aware forgery localization toolkit"};
  app.require_subcommand(1);

  Common common;
  std::string out, checkpoint, manifest, resume;
  int stop_at = -1, size = 224;
  bool no_model = false;

  auto* synth = app.add_subcommand("synth", "Write synthetic train/eval corpora with manifests");
  add_common(synth, common);
  synth->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train and write a checkpoint and train_report.json");
  add_common(train, common);
  train->add_option("--out", out, "Run directory")->required();
  train->add_option("--resume", resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
  train->add_option("--stop-at", stop_at, "Stop after this step (checkpoint is written)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint, optionally under a degradation sweep");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", manifest, "Evaluation manifest (default: synthetic held-out set)");
  eval->add_option("--out", out, "Write the JSON report here as well");

  auto* bench = app.add_subcommand("bench", "Forward latency and FLOPs at the configured sizes");
  add_common(bench, common);

  auto* analyze = app.add_subcommand("analyze", "High-frequency energy of manipulated vs authentic regions");
  add_common(analyze, common);
  analyze->add_option("--manifest", manifest, "Manifest to analyze (default: synthetic splice/removal corpus)");
  analyze->add_option("--out", out, "Write the JSON report here as well");

  auto* flops = app.add_subcommand("flops", "Parameter and FLOP counts of the full-width model");
  add_common(flops, common);
  flops->add_option("--size", size, "Square input size")->check(CLI::PositiveNumber);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  add_common(grad, common);
  grad->add_flag("--no-model", no_model, "Skip the full tiny-model check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = resolve(common);
    if (*synth) {
      print(cmd_synth(cfg, out));
    } else if (*train) {
      TrainOptions opt;
      opt.log = &std::cout;
      opt.stop_at = stop_at;
      if (!resume.empty()) opt.resume = fs::path(resume);
      cmd_train(cfg, out, opt);
      std::cout << "wrote " << (fs::path(out) / "train_report.json").string() << '\n';
    } else if (*eval) {
      RunConfig ec = cfg;
      if (!manifest.empty()) ec.data.eval_manifest = manifest;
      const Json j = cmd_eval(ec, checkpoint, out.empty() ? std::nullopt : std::optional<fs::path>(out));
      print(j);
      if (!j["errors"].empty()) std::cerr << j["errors"].size() << " evaluation items skipped\n";
    } else if (*bench) {
      print(cmd_bench(cfg));
    } else if (*analyze) {
      const AnalyzeResult r = cmd_analyze(cfg, manifest.empty() ? std::nullopt : std::optional<fs::path>(manifest));
      if (!out.empty()) write_json(out, r.report);
      print(r.report);
      return r.passed ? 0 : 3;
    } else if (*flops) {
      print(cmd_flops(cfg, size));
    } else if (*grad) {
      const AnalyzeResult r = cmd_gradcheck(!no_model);
      print(r.report);
      return r.passed ? 0 : 3;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
