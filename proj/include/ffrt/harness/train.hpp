#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ffrt/harness/checkpoint.hpp"
#include "ffrt/harness/dataset.hpp"
#include "ffrt/network/model.hpp"
#include "ffrt/supervision/loss.hpp"

namespace ffrt {

struct StepLog {
  int step = 0;  // 1-based index of the completed step
  double lr = 0.0;
  LossBreakdown loss;
};

inline LossBreakdown compute_losses(Binding& b, const ModelConfig& mcfg, const LossWeights& weights,
                                    const std::vector<const TrainItem*>& batch, Var* total_out = nullptr) {
  std::vector<const Tensor*> images, offsets;
  std::vector<Mask> masks, boundaries;
  for (const TrainItem* t : batch) {
    images.push_back(&t->image);
    offsets.push_back(&t->offsets);
    masks.push_back(t->mask);
    boundaries.push_back(t->boundary);
  }
  Tape& tape = b.tape();
  const HeadOutputs h = model_forward(b, mcfg, tape.leaf(stack(images)));
  const Var ce = loss_ce(h.mask_logits, masks);
  const Var bry = loss_boundary(h.boundary_logits, boundaries);
  const Var pos = loss_position(h.offsets, stack(offsets), masks);
  LossBreakdown parts;
  const Var total = total_loss(ce, bry, pos, weights, &parts);
  if (total_out != nullptr) *total_out = total;
  return parts;
}

// Deterministic single-threaded training loop over a fixed item set.
class Trainer {
 public:
  Trainer(RunConfig cfg, const std::vector<Sample>& samples)
      : cfg_(std::move(cfg)), mcfg_(cfg_.effective_model()), model_(mcfg_, detail::mix_seed(cfg_.seed, 1)) {
    cfg_.validate();
    require(!samples.empty(), ErrorKind::config, "train: empty training set");
    const bool square = std::all_of(samples.begin(), samples.end(),
                                    [](const Sample& s) { return s.image.shape().h == s.image.shape().w; });
    variants_ = cfg_.train.augment == Augment::none ? 1U : cfg_.train.augment == Augment::flip ? 2U : square ? 8U : 4U;
    for (const Sample& s : samples) {
      const TrainItem base = make_item(s);
      items_.push_back(base);
      for (unsigned k = 1; k < variants_; ++k) items_.push_back(transform_item(base, k));
    }
    optimizer_ = make_adamw(model_.params(), cfg_.adamw());
    rng_.seed(detail::mix_seed(cfg_.seed, 2));
    reshuffle();
  }

  const RunConfig& config() const { return cfg_; }
  const ModelConfig& model_config() const { return mcfg_; }
  const Model& model() const { return model_; }
  ParamStore& params() { return model_.params(); }
  int step() const { return static_cast<int>(loop_.step); }
  const AdamWState& optimizer() const { return optimizer_; }

  // One optimizer step. A non-finite loss raises a numeric error and leaves
  // the trainer exactly as it was, batch position and RNG included.
  StepLog train_step() {
    const LoopState loop_before = loop_;
    const auto rng_before = rng_;
    std::vector<const TrainItem*> batch;
    std::vector<TrainItem> recolored;
    recolored.reserve(cfg_.train.batch_size);
    for (int i = 0; i < cfg_.train.batch_size; ++i) {
      if (loop_.cursor >= loop_.order.size()) reshuffle();
      const std::uint64_t idx = loop_.order[loop_.cursor++];
      // variants_ is a power of two, so the low bits are unbiased.
      const std::uint64_t k = variants_ > 1 ? rng_() & (variants_ - 1) : 0;
      const TrainItem& item = items_[idx * variants_ + k];
      if (cfg_.train.color_augment) {
        // 12 colour variants; the modulo bias is below 2^-60.
        const std::uint64_t r = rng_() % 12;
        recolored.push_back(recolor(item, static_cast<int>(r % 6), r >= 6));
        batch.push_back(&recolored.back());
      } else {
        batch.push_back(&item);
      }
    }
    Tape tape;
    Binding b(tape, model_.params());
    Var total;
    StepLog log;
    log.step = static_cast<int>(loop_.step) + 1;
    log.lr = cfg_.lr_at(static_cast<int>(loop_.step));
    try {
      // the loss functions may raise on NaN themselves
      log.loss = compute_losses(b, mcfg_, cfg_.loss, batch, &total);
      if (!std::isfinite(log.loss.total)) fail(ErrorKind::numeric, "non-finite loss at step ", log.step);
    } catch (...) {
      loop_ = loop_before;
      rng_ = rng_before;
      throw;
    }
    tape.backward(total);
    b.collect_grads(model_.params());
    optimizer_.hyper.lr = log.lr;
    adamw_step(model_.params(), optimizer_);
    ++loop_.step;
    return log;
  }

  Checkpoint checkpoint() const {
    Checkpoint ck;
    ck.config = to_text(cfg_);
    ck.params = snapshot(model_.params());
    ck.optimizer = optimizer_;
    ck.loop = loop_;
    std::ostringstream os;
    os << rng_;
    ck.loop.rng = os.str();
    return ck;
  }

  // Restores model, optimizer and loop state; the checkpoint's config must
  // describe the same model and data order.
  void resume(const Checkpoint& ck) {
    restore(model_.params(), ck.params);
    require(ck.optimizer.slots.size() == model_.params().size(), ErrorKind::config,
            "checkpoint optimizer does not match model");
    optimizer_ = ck.optimizer;
    require(ck.loop.order.size() == sample_count(), ErrorKind::config, "checkpoint data order covers ",
            ck.loop.order.size(), " items, training set has ", sample_count());
    loop_ = ck.loop;
    std::istringstream is(ck.loop.rng);
    is >> rng_;
    require(!is.fail(), ErrorKind::parse, "checkpoint: bad RNG state");
  }

 private:
  // Channel permutation `perm` (0..5) and optional inversion x -> 1 - x. Both
  // keep noise statistics, so the labels carry over unchanged.
  static TrainItem recolor(const TrainItem& t, int perm, bool invert) {
    static constexpr int orders[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    TrainItem out = t;
    const Shape s = t.image.shape();
    for (int c = 0; c < s.c; ++c) {
      const int src = s.c == 3 ? orders[perm][c] : c;
      const double* in = t.image.plane(0, src);
      double* o = out.image.plane(0, c);
      for (std::size_t i = 0; i < s.plane(); ++i) o[i] = invert ? 1.0 - in[i] : in[i];
    }
    return out;
  }

  std::size_t sample_count() const { return items_.size() / variants_; }

  void reshuffle() {
    if (!loop_.order.empty()) ++loop_.epoch;
    const std::size_t n = sample_count();
    loop_.order.resize(n);
    for (std::size_t i = 0; i < n; ++i) loop_.order[i] = i;
    // Fisher-Yates on raw engine output; library distributions are not portable.
    for (std::size_t i = n; i > 1; --i) {
      const std::uint64_t j = rng_() % i;
      std::swap(loop_.order[i - 1], loop_.order[j]);
    }
    loop_.cursor = 0;
  }

  RunConfig cfg_;
  ModelConfig mcfg_;
  Model model_;
  std::vector<TrainItem> items_;
  unsigned variants_ = 1;  // transformed copies stored per sample
  AdamWState optimizer_;
  std::mt19937_64 rng_;
  LoopState loop_;
};

}  // namespace ffrt
