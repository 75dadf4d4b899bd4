#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ffrt/data/manifest.hpp"
#include "ffrt/harness/config.hpp"
#include "ffrt/supervision/geometry.hpp"

namespace ffrt {

// Image plus precomputed supervision targets.
struct TrainItem {
  Tensor image;  // [1,3,H,W]
  Mask mask;
  Mask boundary;
  Tensor offsets;  // [1,2,H,W], offsets divided by the image side
};

inline TrainItem make_item(const Sample& s) {
  TrainItem t{s.image, s.mask, boundary_target(s.mask), {}};
  const PositionTargets pt = position_targets(s.mask);
  t.offsets = pt.offsets;
  const Shape os = t.offsets.shape();
  for (std::size_t i = 0; i < os.plane(); ++i) {
    t.offsets.plane(0, 0)[i] /= os.w;
    t.offsets.plane(0, 1)[i] /= os.h;
  }
  return t;
}

// Dihedral variant of an item: bit 0 mirrors columns, bit 1 mirrors rows,
// bit 2 transposes (square images only). Targets are recomputed from the
// transformed mask since offsets are not equivariant under a plain copy.
inline TrainItem transform_item(const TrainItem& t, unsigned k) {
  const Shape is = t.image.shape();
  const bool tr = (k & 4U) != 0;
  require(!tr || is.h == is.w, ErrorKind::dimension, "transpose needs a square image, got ", is.h, "x", is.w);
  auto src = [&](int y, int x) {
    if (tr) std::swap(y, x);
    if (k & 1U) x = is.w - 1 - x;
    if (k & 2U) y = is.h - 1 - y;
    return std::pair{y, x};
  };
  Sample s;
  s.image = Tensor(is);
  s.mask = Mask(is.h, is.w);
  for (int y = 0; y < is.h; ++y)
    for (int x = 0; x < is.w; ++x) {
      const auto [sy, sx] = src(y, x);
      for (int c = 0; c < is.c; ++c) s.image.at(0, c, y, x) = t.image.at(0, c, sy, sx);
      s.mask(y, x) = t.mask(sy, sx);
    }
  return make_item(s);
}

inline TrainItem mirror_item(const TrainItem& t) { return transform_item(t, 1U); }

struct DatasetError {
  std::string id;
  std::string message;
};

struct Dataset {
  std::vector<std::string> ids;
  std::vector<Sample> samples;
  std::vector<DatasetError> errors;
};

// Loads every manifest entry that parses and whose image and mask agree in
// size; failures are itemized and skipped.
inline Dataset load_dataset(const std::filesystem::path& manifest) {
  Dataset d;
  for (const auto& e : read_manifest(manifest)) {
    try {
      Sample s;
      s.image = read_pnm(e.image);
      require(s.image.shape().c == 3, ErrorKind::parse, "image '", e.image.string(), "' is not RGB");
      s.mask = read_mask(e.mask);
      require(s.mask.h == s.image.shape().h && s.mask.w == s.image.shape().w, ErrorKind::dimension, "mask ",
              s.mask.h, "x", s.mask.w, " does not match image ", s.image.shape().h, "x", s.image.shape().w);
      s.meta.type = e.type;
      s.meta.seed = e.seed;
      d.ids.push_back(e.id);
      d.samples.push_back(std::move(s));
    } catch (const Error& err) {
      d.errors.push_back({e.id, err.what()});
    }
  }
  return d;
}

inline Dataset synth_dataset(std::size_t count, std::uint64_t seed, int h, int w, int authentic_every) {
  CorpusSpec spec;
  spec.count = count;
  spec.seed = seed;
  spec.height = h;
  spec.width = w;
  spec.authentic_every = authentic_every;
  Dataset d;
  d.samples = make_corpus(spec);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", i);
    d.ids.emplace_back(id);
  }
  return d;
}

inline Dataset train_dataset(const RunConfig& c) {
  if (!c.data.manifest.empty()) return load_dataset(c.data.manifest);
  return synth_dataset(c.data.train_count, c.data.train_seed, c.data.height, c.data.width, c.data.authentic_every);
}

inline Dataset eval_dataset(const RunConfig& c) {
  if (!c.data.eval_manifest.empty()) return load_dataset(c.data.eval_manifest);
  return synth_dataset(c.data.eval_count, c.data.eval_seed, c.data.height, c.data.width, c.data.authentic_every);
}

// Stacks [1,C,H,W] tensors into [N,C,H,W].
inline Tensor stack(const std::vector<const Tensor*>& parts) {
  require(!parts.empty(), ErrorKind::dimension, "stack: nothing to stack");
  const Shape s = parts[0]->shape();
  Tensor out(Shape{static_cast<int>(parts.size()), s.c, s.h, s.w});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require(parts[i]->shape() == s, ErrorKind::dimension, "stack: shape ", parts[i]->shape().str(), " vs ", s.str());
    std::copy(parts[i]->values().begin(), parts[i]->values().end(), out.values().begin() + i * s.numel());
  }
  return out;
}

}  // namespace ffrt
