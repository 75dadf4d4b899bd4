#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "ffrt/harness/commands.hpp"

using namespace ffrt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ffrt_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return static_cast<ErrorKind>(-1);
}

// Small and quick: width / 8, 32x32 images, few samples.
RunConfig small_config() {
  RunConfig c;
  c.width_divisor = 8;
  c.data.height = c.data.width = 32;
  c.data.train_count = 6;
  c.data.eval_count = 4;
  c.train.batch_size = 2;
  c.train.steps = 6;
  c.train.log_every = 1;
  c.optimizer.lr = 1e-3;
  c.optimizer.lr_final = 1e-4;
  return c;
}

std::vector<Sample> samples_of(const RunConfig& c) { return train_dataset(c).samples; }

}  // namespace

// ---- Config ------------------------------------------------------------

TEST(Config, DefaultsMatchDocumentedValues) {
  const RunConfig c;
  EXPECT_EQ(c.optimizer.lr, 1e-4);
  EXPECT_EQ(c.optimizer.lr_final, 1e-5);
  EXPECT_EQ(c.optimizer.weight_decay, 0.025);
  EXPECT_EQ(c.optimizer.beta1, 0.9);
  EXPECT_EQ(c.optimizer.beta2, 0.999);
  EXPECT_EQ(c.loss.ce, 1.0);
  EXPECT_EQ(c.loss.bry, 2.0);
  EXPECT_EQ(c.loss.pos, 5.0);
  EXPECT_EQ(c.train.batch_size, 8);
  EXPECT_EQ(c.train.steps, 2000);
  EXPECT_EQ(c.data.height, 64);
  EXPECT_EQ(c.width_divisor, 2);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, LinearLearningRate) {
  RunConfig c;
  c.train.steps = 11;
  EXPECT_DOUBLE_EQ(c.lr_at(0), 1e-4);
  EXPECT_DOUBLE_EQ(c.lr_at(10), 1e-5);
  EXPECT_NEAR(c.lr_at(5), 5.5e-5, 1e-18);
}

TEST(Config, TextRoundTripIsCanonical) {
  RunConfig c = small_config();
  c.eval.sweep.gaussian_blur = {0.5, 1.0, 2.0};
  c.model.attention = AttentionKind::vanilla;
  c.train.augment = Augment::flip;
  c.train.color_augment = false;
  c.data.manifest = "some/where.tsv";
  c.seed = 18446744073709551615ULL;
  c.optimizer.lr = 0.1 + 0.2;  // not representable in short decimal
  const std::string text = to_text(c);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.optimizer.lr, c.optimizer.lr);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.eval.sweep.gaussian_blur, c.eval.sweep.gaussian_blur);
  EXPECT_EQ(back.model.attention, AttentionKind::vanilla);
  EXPECT_EQ(back.train.augment, Augment::flip);
  EXPECT_FALSE(back.train.color_augment);
}

TEST(Config, CommentsBlanksAndWhitespace) {
  const RunConfig c = parse_run_config("# header\n\n  optimizer.lr =   3e-4  # trailing\ntrain.steps=7\n");
  EXPECT_EQ(c.optimizer.lr, 3e-4);
  EXPECT_EQ(c.train.steps, 7);
}

TEST(Config, UnknownKeyRejectedWithLine) {
  try {
    parse_run_config("train.steps = 3\noptimiser.lr = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("optimiser.lr"), std::string::npos) << e.what();
  }
}

TEST(Config, BadValuesRejected) {
  for (const char* t : {"train.steps = abc", "train.steps = 3.5", "optimizer.lr = -1", "model.attention = linear",
                        "train.augment = rotate", "train.color_augment = maybe", "eval.sweep.jpeg_like = 0",
                        "eval.sweep.gaussian_blur = 1, x", "data.height = 16", "model.heads = 5", "no equals sign",
                        "loss.pos = -2", "eval.threshold = 1"})
    EXPECT_EQ(kind_of([&] { parse_run_config(t); }), ErrorKind::config) << t;
}

TEST(Config, FileLoad) {
  const fs::path dir = scratch("config");
  write_file_atomic(dir / "run.cfg", "seed = 9\n");
  EXPECT_EQ(load_run_config(dir / "run.cfg").seed, 9u);
  EXPECT_EQ(kind_of([&] { load_run_config(dir / "missing.cfg"); }), ErrorKind::io);
}

// ---- Checkpoint --------------------------------------------------------

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch("ckpt");
    Trainer t(small_config(), samples_of(small_config()));
    t.train_step();
    t.train_step();
    ck_ = t.checkpoint();
    bytes_ = encode_checkpoint(ck_);
  }
  fs::path dir_;
  Checkpoint ck_;
  std::string bytes_;
};

TEST_F(CheckpointTest, SaveLoadSaveByteIdentical) {
  save_checkpoint(dir_ / "a.ffrt", ck_);
  const Checkpoint back = load_checkpoint(dir_ / "a.ffrt");
  save_checkpoint(dir_ / "b.ffrt", back);
  EXPECT_EQ(read_file(dir_ / "a.ffrt"), read_file(dir_ / "b.ffrt"));
  EXPECT_EQ(back.config, ck_.config);
  EXPECT_EQ(back.loop.step, 2u);
  ASSERT_EQ(back.params.size(), ck_.params.size());
  for (std::size_t i = 0; i < back.params.size(); ++i) {
    EXPECT_EQ(back.params[i].name, ck_.params[i].name);
    EXPECT_EQ(back.params[i].value.values(), ck_.params[i].value.values());
  }
  EXPECT_FALSE(fs::exists(dir_ / "a.ffrt.tmp"));
}

TEST_F(CheckpointTest, HeaderLayout) {
  EXPECT_EQ(bytes_.substr(0, 4), "FFRT");
  std::uint32_t version;
  std::memcpy(&version, bytes_.data() + 4, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  std::uint64_t sum;
  std::memcpy(&sum, bytes_.data() + bytes_.size() - 8, 8);
  EXPECT_EQ(sum, fnv1a(std::string_view(bytes_).substr(0, bytes_.size() - 8)));
}

TEST_F(CheckpointTest, FlippedPayloadByteIsChecksumError) {
  for (std::size_t at : {bytes_.size() / 2, bytes_.size() - 20, std::size_t{40}}) {
    std::string b = bytes_;
    b[at] ^= 0x10;
    EXPECT_EQ(kind_of([&] { decode_checkpoint(b); }), ErrorKind::bad_checksum) << at;
  }
}

TEST_F(CheckpointTest, NewerVersionRejected) {
  std::string b = bytes_;
  const std::uint32_t v = kCheckpointVersion + 1;
  std::memcpy(b.data() + 4, &v, 4);
  EXPECT_EQ(kind_of([&] { decode_checkpoint(b); }), ErrorKind::unsupported_version);
}

TEST_F(CheckpointTest, BadMagicAndTruncation) {
  std::string b = bytes_;
  b[0] = 'X';
  EXPECT_EQ(kind_of([&] { decode_checkpoint(b); }), ErrorKind::bad_magic);
  EXPECT_EQ(kind_of([&] { decode_checkpoint("FF"); }), ErrorKind::bad_magic);
  // Truncation also breaks the checksum, which is checked first.
  EXPECT_EQ(kind_of([&] { decode_checkpoint(bytes_.substr(0, bytes_.size() - 100)); }), ErrorKind::bad_checksum);
}

TEST_F(CheckpointTest, RestoreChecksNamesAndShapes) {
  Model m(small_config().effective_model(), 1);
  auto tensors = ck_.params;
  EXPECT_NO_THROW(restore(m.params(), tensors));
  tensors[3].name = "renamed";
  EXPECT_EQ(kind_of([&] { restore(m.params(), tensors); }), ErrorKind::config);
  tensors = ck_.params;
  tensors.pop_back();
  EXPECT_EQ(kind_of([&] { restore(m.params(), tensors); }), ErrorKind::config);
  RunConfig wider = small_config();
  wider.width_divisor = 4;
  Model w(wider.effective_model(), 1);
  EXPECT_EQ(kind_of([&] { restore(w.params(), ck_.params); }), ErrorKind::config);
}

// ---- Trainer -----------------------------------------------------------

TEST(Trainer, ZeroLearningRateKeepsParameters) {
  RunConfig c = small_config();
  c.optimizer.lr = c.optimizer.lr_final = 0.0;
  Trainer t(c, samples_of(c));
  const auto before = snapshot(t.params());
  for (int i = 0; i < 3; ++i) t.train_step();
  const auto after = snapshot(t.params());
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].value.values(), after[i].value.values());
}

TEST(Trainer, LossBreakdownIdentity) {
  RunConfig c = small_config();
  Trainer t(c, samples_of(c));
  for (int i = 0; i < 3; ++i) {
    const StepLog s = t.train_step();
    EXPECT_EQ(s.step, i + 1);
    EXPECT_DOUBLE_EQ(s.lr, c.lr_at(i));
    EXPECT_NEAR(s.loss.total, 1.0 * s.loss.ce + 2.0 * s.loss.bry + 5.0 * s.loss.pos, 1e-12);
  }
}

TEST(Trainer, LossDecreasesOnTinySet) {
  RunConfig c = small_config();
  c.data.train_count = 2;
  c.train.augment = Augment::none;
  c.train.color_augment = false;
  c.optimizer.lr = c.optimizer.lr_final = 3e-3;
  Trainer t(c, samples_of(c));
  const double first = t.train_step().loss.total;
  double last = first;
  for (int i = 0; i < 30; ++i) last = t.train_step().loss.total;
  EXPECT_LT(last, 0.8 * first);
}

TEST(Trainer, DeterministicCheckpointBytes) {
  const RunConfig c = small_config();
  Trainer a(c, samples_of(c)), b(c, samples_of(c));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(a.train_step().loss.total, b.train_step().loss.total);
  EXPECT_EQ(encode_checkpoint(a.checkpoint()), encode_checkpoint(b.checkpoint()));
  RunConfig other = c;
  other.seed = 2;
  Trainer d(other, samples_of(other));
  for (int i = 0; i < 4; ++i) d.train_step();
  EXPECT_NE(encode_checkpoint(a.checkpoint()), encode_checkpoint(d.checkpoint()));
}

TEST(Trainer, ResumeMatchesUninterruptedBitExactly) {
  const RunConfig c = small_config();
  Trainer full(c, samples_of(c));
  std::vector<double> reference;
  for (int i = 0; i < 6; ++i) reference.push_back(full.train_step().loss.total);

  Trainer first(c, samples_of(c));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(first.train_step().loss.total, reference[i]);  // crosses an epoch
  const std::string saved = encode_checkpoint(first.checkpoint());
  Trainer second(c, samples_of(c));
  second.resume(decode_checkpoint(saved));
  EXPECT_EQ(second.step(), 4);
  for (int i = 4; i < 6; ++i) EXPECT_EQ(second.train_step().loss.total, reference[i]);
  EXPECT_EQ(encode_checkpoint(second.checkpoint()), encode_checkpoint(full.checkpoint()));
}

TEST(Trainer, ResumeRejectsDifferentTrainingSet) {
  const RunConfig c = small_config();
  Trainer a(c, samples_of(c));
  a.train_step();
  RunConfig bigger = c;
  bigger.data.train_count = 9;
  Trainer b(bigger, samples_of(bigger));
  EXPECT_EQ(kind_of([&] { b.resume(a.checkpoint()); }), ErrorKind::config);
}

TEST(Trainer, NonFiniteLossRaisesBeforeUpdate) {
  RunConfig c = small_config();
  Trainer t(c, samples_of(c));
  t.train_step();
  // Poison the mask head's output bias.
  for (std::size_t i = 0; i < t.params().size(); ++i)
    if (t.params().name(i).find("head.mask") != std::string::npos)
      t.params().value(i).values()[0] = std::numeric_limits<double>::quiet_NaN();
  const std::string before = encode_checkpoint(t.checkpoint());
  EXPECT_EQ(kind_of([&] { t.train_step(); }), ErrorKind::numeric);
  EXPECT_EQ(t.step(), 1);
  EXPECT_EQ(encode_checkpoint(t.checkpoint()), before);
}

// Overfit sanity from the documented example: 200 steps on 32 synthetic
// 64x64 samples with the desk config should reach training F1 0.90.
TEST(Trainer, OverfitsDeskSetIn200Steps) {
  RunConfig c = load_run_config(fs::path(FFRT_CONFIG_DIR) / "desk.cfg");
  c.train.steps = 200;
  ASSERT_EQ(c.data.train_count, 32);
  const Dataset d = train_dataset(c);
  Trainer t(c, d.samples);
  for (int i = 0; i < 200; ++i) t.train_step();
  const EvalSummary s = evaluate(t.model(), d, c.eval.threshold);
  EXPECT_GE(s.mean_f1, 0.90);
}

TEST(Trainer, EmptyTrainingSetRejected) {
  EXPECT_EQ(kind_of([] { Trainer t(small_config(), {}); }), ErrorKind::config);
}

// ---- Augmentation ------------------------------------------------------

TEST(Augment, DihedralVariantsAreConsistent) {
  SynthSpec s;
  s.type = ManipulationType::splice;
  const TrainItem base = make_item(synth_sample(3, s));
  EXPECT_EQ(transform_item(base, 0).image.values(), base.image.values());
  for (unsigned k = 0; k < 8; ++k) {
    const TrainItem t = transform_item(base, k);
    // Every transform is a pixel permutation: same multiset, same mask area.
    EXPECT_EQ(t.mask.count(), base.mask.count());
    auto a = t.image.values(), b = base.image.values();
    std::vector<double> va(a.begin(), a.end()), vb(b.begin(), b.end());
    std::sort(va.begin(), va.end());
    std::sort(vb.begin(), vb.end());
    EXPECT_EQ(va, vb) << k;
    // Targets equal those recomputed from the transformed mask.
    Sample ts{t.image, t.mask, {}};
    const TrainItem fresh = make_item(ts);
    EXPECT_EQ(fresh.boundary, t.boundary);
    EXPECT_EQ(fresh.offsets.values(), t.offsets.values());
  }
  // Mirrors and the transpose are involutions.
  for (unsigned k : {1U, 2U, 4U}) EXPECT_EQ(transform_item(transform_item(base, k), k).mask, base.mask);
  // bit 0 mirrors columns.
  const TrainItem m = transform_item(base, 1U);
  EXPECT_EQ(m.image.at(0, 1, 5, 0), base.image.at(0, 1, 5, 63));
  const TrainItem tr = transform_item(base, 4U);
  EXPECT_EQ(tr.image.at(0, 2, 7, 30), base.image.at(0, 2, 30, 7));
}

TEST(Augment, TransposeNeedsSquare) {
  SynthSpec s;
  s.height = 32;
  s.width = 48;
  const TrainItem base = make_item(synth_sample(4, s));
  EXPECT_NO_THROW(transform_item(base, 3U));
  EXPECT_EQ(kind_of([&] { transform_item(base, 4U); }), ErrorKind::dimension);
  // The trainer falls back to the four non-transposing variants.
  RunConfig c = small_config();
  c.data.height = 32;
  c.data.width = 48;
  Trainer t(c, samples_of(c));
  EXPECT_NO_THROW(t.train_step());
}

TEST(Augment, ModesChangeTrajectoryButStayDeterministic) {
  RunConfig a = small_config();
  a.train.augment = Augment::none;
  a.train.color_augment = false;
  RunConfig b = small_config();
  Trainer ta(a, samples_of(a)), tb(b, samples_of(b)), tb2(b, samples_of(b));
  double la = 0, lb = 0, lb2 = 0;
  for (int i = 0; i < 3; ++i) {
    la = ta.train_step().loss.total;
    lb = tb.train_step().loss.total;
    lb2 = tb2.train_step().loss.total;
  }
  EXPECT_NE(la, lb);
  EXPECT_EQ(lb, lb2);
}

// ---- Evaluation --------------------------------------------------------

TEST(Evaluate, UntrainedZeroHeadModelIsUninformative) {
  const RunConfig c = small_config();
  const Model m(c.effective_model(), 5);  // output convs start at zero
  const Dataset d = eval_dataset(c);
  const EvalSummary s = evaluate(m, d, 0.5);
  ASSERT_EQ(s.items.size(), d.samples.size());
  EXPECT_NEAR(s.mean_auc, 0.5, 0.05);
  EXPECT_EQ(s.mean_f1, 0.0);  // probabilities are exactly 0.5, never above the threshold
}

TEST(Evaluate, MeansEqualPerItemAverages) {
  RunConfig c = small_config();
  c.data.authentic_every = 3;
  Trainer t(c, samples_of(c));
  for (int i = 0; i < 3; ++i) t.train_step();
  const Dataset d = eval_dataset(c);
  const EvalSummary s = evaluate(t.model(), d, 0.5, std::nullopt, 3);
  double f = 0.0, a = 0.0;
  std::size_t na = 0;
  for (const auto& m : s.items) {
    f += m.f1;
    if (m.auc) {
      a += *m.auc;
      ++na;
    }
  }
  EXPECT_EQ(na, s.auc_count);
  EXPECT_LT(na, s.items.size());  // authentic items have no AUC
  EXPECT_NEAR(s.mean_f1, f / static_cast<double>(s.items.size()), 1e-15);
  EXPECT_NEAR(s.mean_auc, a / static_cast<double>(na), 1e-15);
  // Batch size does not change per-item results.
  const EvalSummary s1 = evaluate(t.model(), d, 0.5, std::nullopt, 1);
  for (std::size_t i = 0; i < s.items.size(); ++i) EXPECT_EQ(s.items[i].f1, s1.items[i].f1);
}

TEST(Evaluate, IdentityDegradationsReproduceCleanMetrics) {
  const RunConfig c = small_config();
  Trainer t(c, samples_of(c));
  for (int i = 0; i < 6; ++i) t.train_step();
  const Dataset d = eval_dataset(c);
  const EvalSummary clean = evaluate(t.model(), d, 0.5);
  for (const DegradationSpec spec : {DegradationSpec{DegradationKind::gaussian_blur, 0.01},
                                     DegradationSpec{DegradationKind::gaussian_noise, 1e-9},
                                     DegradationSpec{DegradationKind::resize, 1.0},
                                     DegradationSpec{DegradationKind::jpeg_like, 100}}) {
    const EvalSummary s = evaluate(t.model(), d, 0.5, spec);
    EXPECT_NEAR(s.mean_f1, clean.mean_f1, 1e-6) << spec.str();
    EXPECT_NEAR(s.mean_auc, clean.mean_auc, 1e-6) << spec.str();
  }
}

TEST(Evaluate, SweepCurvesFollowConfigOrder) {
  const RunConfig c = small_config();
  const Model m(c.effective_model(), 5);
  SweepConfig sw;
  sw.resize = {1.0, 0.5};
  sw.jpeg_like = {90, 50, 10};
  const auto curves = run_sweep(m, eval_dataset(c), 0.5, sw);
  ASSERT_EQ(curves.size(), 2u);
  EXPECT_EQ(curves[0].kind, DegradationKind::resize);
  EXPECT_EQ(curves[1].points.size(), 3u);
  EXPECT_EQ(curves[1].params, (std::vector<double>{90, 50, 10}));
  EXPECT_TRUE(curves[1].monotone_f1());  // constant zero F1
}

TEST(SweepCurve, MonotoneCheck) {
  SweepCurve c{DegradationKind::gaussian_blur, {}, {}};
  for (double f : {0.9, 0.9, 0.5, 0.1}) {
    EvalSummary s;
    s.mean_f1 = f;
    c.points.push_back(s);
  }
  EXPECT_TRUE(c.monotone_f1());
  c.points[3].mean_f1 = 0.6;
  EXPECT_FALSE(c.monotone_f1());
  EXPECT_TRUE(c.monotone_f1(0.5));
}

TEST(Dataset, ManifestMismatchItemizedAndSkipped) {
  const fs::path dir = scratch("mismatch");
  CorpusSpec spec;
  spec.count = 3;
  spec.height = spec.width = 32;
  auto entries = write_corpus(dir, make_corpus(spec));
  write_pnm(entries[1].mask, Mask(16, 16));
  entries.push_back({"ghost", dir / "none.ppm", dir / "none.pgm", ManipulationType::splice, 1});
  write_file_atomic(dir / "manifest.tsv", format_manifest(entries, dir));
  const Dataset d = load_dataset(dir / "manifest.tsv");
  EXPECT_EQ(d.samples.size(), 2u);
  ASSERT_EQ(d.errors.size(), 2u);
  EXPECT_EQ(d.errors[0].id, "s00001");
  EXPECT_EQ(d.errors[1].id, "ghost");
  EXPECT_EQ(d.ids, (std::vector<std::string>{"s00000", "s00002"}));
}

// ---- Commands ----------------------------------------------------------

TEST(Commands, TrainTwiceGivesIdenticalBytes) {
  const RunConfig c = small_config();
  const fs::path a = scratch("train_a"), b = scratch("train_b");
  cmd_train(c, a);
  cmd_train(c, b);
  EXPECT_EQ(read_file(a / kCheckpointName), read_file(b / kCheckpointName));
  EXPECT_EQ(read_file(a / "train_report.json"), read_file(b / "train_report.json"));
  const Json j = Json::parse(read_file(a / "train_report.json"));
  EXPECT_EQ(j["steps_completed"], 6);
  EXPECT_EQ(j["steps"].size(), 6u);
  EXPECT_TRUE(j.contains("heldout_metrics"));
}

TEST(Commands, InterruptedTrainResumesToIdenticalBytes) {
  RunConfig c = small_config();
  c.train.checkpoint_every = 2;
  const fs::path full = scratch("resume_full"), part = scratch("resume_part");
  cmd_train(c, full);
  TrainOptions stop;
  stop.stop_at = 3;
  const Json partial = cmd_train(c, part, stop);
  EXPECT_EQ(partial["steps_completed"], 3);
  EXPECT_FALSE(partial["finished"].get<bool>());
  TrainOptions resume;
  resume.resume = part / kCheckpointName;
  cmd_train(c, part, resume);
  EXPECT_EQ(read_file(full / kCheckpointName), read_file(part / kCheckpointName));
  EXPECT_EQ(read_file(full / "train_report.json"), read_file(part / "train_report.json"));
}

TEST(Commands, ResumeWithOtherConfigRejected) {
  const RunConfig c = small_config();
  const fs::path dir = scratch("resume_cfg");
  TrainOptions stop;
  stop.stop_at = 1;
  cmd_train(c, dir, stop);
  RunConfig other = c;
  other.optimizer.lr = 5e-4;
  TrainOptions resume;
  resume.resume = dir / kCheckpointName;
  EXPECT_EQ(kind_of([&] { cmd_train(other, dir, resume); }), ErrorKind::config);
}

TEST(Commands, EvalReportConsistent) {
  RunConfig c = small_config();
  const fs::path dir = scratch("eval");
  cmd_train(c, dir);
  c.eval.sweep.gaussian_blur = {0.01, 1.0};
  const Json j = cmd_eval(c, dir / kCheckpointName, dir / "eval.json");
  EXPECT_TRUE(fs::exists(dir / "eval.json"));
  const Json& clean = j["clean"];
  double f = 0.0;
  for (const auto& it : clean["items"]) f += it["f1"].get<double>();
  EXPECT_NEAR(clean["mean_f1"].get<double>(), f / static_cast<double>(clean["items"].size()), 1e-15);
  ASSERT_EQ(j["sweep"].size(), 1u);
  EXPECT_EQ(j["sweep"][0]["points"].size(), 2u);
  EXPECT_NEAR(j["sweep"][0]["points"][0]["mean_f1"].get<double>(), clean["mean_f1"].get<double>(), 1e-6);
}

TEST(Commands, EvalOnBadManifestListsErrors) {
  const RunConfig c = small_config();
  const fs::path dir = scratch("eval_bad");
  TrainOptions stop;
  stop.stop_at = 1;
  cmd_train(c, dir, stop);
  CorpusSpec spec;
  spec.count = 2;
  spec.height = spec.width = 32;
  auto entries = write_corpus(dir / "data", make_corpus(spec));
  entries.push_back({"gone", dir / "x.ppm", dir / "x.pgm", ManipulationType::removal, 1});
  write_file_atomic(dir / "data" / "manifest.tsv", format_manifest(entries, dir / "data"));
  RunConfig e = c;
  e.data.eval_manifest = (dir / "data" / "manifest.tsv").string();
  const Json j = cmd_eval(e, dir / kCheckpointName);
  EXPECT_EQ(j["errors"].size(), 1u);
  EXPECT_EQ(j["clean"]["count"], 2);
}

TEST(Commands, FlopsReportMatchesCounter) {
  const RunConfig c;
  const Json j = cmd_flops(c);
  ModelConfig m = c.model;
  const FlopReport r = count_flops(m, 224, 224);
  EXPECT_EQ(j["report"]["params"].get<std::int64_t>(), r.params());
  EXPECT_EQ(j["report"]["flops"].get<double>(), r.reported_flops());
  std::int64_t sum = 0;
  for (const auto& row : j["report"]["modules"]) sum += row["flops"].get<std::int64_t>();
  EXPECT_EQ(sum, r.total_flops());
  EXPECT_EQ(j["stages"].size(), 3u);
}

TEST(Commands, BenchFlopsColumnIsCounterOutput) {
  RunConfig c = small_config();
  c.bench.sizes = {32, 64};
  c.bench.repeats = 1;
  c.bench.warmup = 0;
  const Json j = cmd_bench(c);
  ASSERT_EQ(j["rows"].size(), 2u);
  for (const auto& row : j["rows"]) {
    ModelConfig mc = c.effective_model();
    const int s = row["size"].get<int>();
    EXPECT_EQ(row["flops"].get<double>(), count_flops(mc, s, s).reported_flops());
    EXPECT_LT(row["flops"].get<double>(), row["flops_vanilla"].get<double>());
    EXPECT_GT(row["median_ms"].get<double>(), 0.0);
  }
}

TEST(Commands, AnalyzeSyntheticAndEdgeCases) {
  RunConfig c;
  c.analyze.count = 40;
  const AnalyzeResult r = cmd_analyze(c, std::nullopt);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.report["entries"].size(), 40u);
  EXPECT_GE(r.report["fraction_higher"].get<double>(), 0.8);

  const fs::path dir = scratch("analyze");
  CorpusSpec spec;
  spec.count = 3;
  spec.types = {ManipulationType::authentic};
  write_corpus(dir / "auth", make_corpus(spec));
  const AnalyzeResult a = cmd_analyze(c, dir / "auth" / "manifest.tsv");
  EXPECT_EQ(a.report["manipulated"], 0);
  EXPECT_TRUE(a.report["fraction_higher"].is_null());
  EXPECT_TRUE(a.report.contains("note"));

  spec.count = 1;
  spec.types = {ManipulationType::splice};
  write_corpus(dir / "one", make_corpus(spec));
  EXPECT_EQ(cmd_analyze(c, dir / "one" / "manifest.tsv").report["entries"].size(), 1u);

  write_file_atomic(dir / "empty.tsv", "# nothing\n");
  EXPECT_THROW(cmd_analyze(c, dir / "empty.tsv"), Error);
}

TEST(Commands, SynthWritesLoadableCorpora) {
  RunConfig c = small_config();
  const fs::path dir = scratch("synth");
  cmd_synth(c, dir);
  const Dataset tr = load_dataset(dir / "train" / "manifest.tsv");
  EXPECT_TRUE(tr.errors.empty());
  EXPECT_EQ(tr.samples.size(), 6u);
  EXPECT_EQ(load_dataset(dir / "eval" / "manifest.tsv").samples.size(), 4u);
}
