#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ffrt/data/degrade.hpp"
#include "ffrt/harness/dataset.hpp"
#include "ffrt/network/model.hpp"
#include "ffrt/supervision/metrics.hpp"

namespace ffrt {

struct ItemMetrics {
  std::string id;
  ManipulationType type = ManipulationType::authentic;
  double f1 = 0.0;
  std::optional<double> auc;  // absent when the mask has a single class
};

struct EvalSummary {
  std::string condition = "clean";
  double mean_f1 = 0.0;
  double mean_auc = 0.0;
  std::size_t auc_count = 0;  // images with a defined AUC
  std::vector<ItemMetrics> items;
};

// Manipulated-class logit margin; monotone in the class-1 probability.
inline std::vector<double> class1_margin(const Tensor& logits, int n) {
  const Shape s = logits.shape();
  std::vector<double> m(s.plane());
  const double* z0 = logits.plane(n, 0);
  const double* z1 = logits.plane(n, 1);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = z1[i] - z0[i];
  return m;
}

// Per-image F1 at the threshold and per-image AUC; means are plain averages
// over images (AUC over images where it is defined).
inline EvalSummary evaluate(const Model& model, const Dataset& data, double threshold,
                            const std::optional<DegradationSpec>& degradation = std::nullopt, int batch = 8) {
  EvalSummary out;
  if (degradation) out.condition = degradation->str();
  const std::size_t n = data.samples.size();
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch));
    std::vector<Tensor> images;
    for (std::size_t i = start; i < end; ++i) {
      const Sample& s = data.samples[i];
      images.push_back(degradation ? apply_degradation(s.image, *degradation, detail::mix_seed(s.meta.seed, 77))
                                   : s.image);
    }
    std::vector<const Tensor*> ptrs;
    for (const auto& t : images) ptrs.push_back(&t);
    const ModelOutput o = model.forward(stack(ptrs));
    for (std::size_t i = start; i < end; ++i) {
      const Sample& s = data.samples[i];
      const int k = static_cast<int>(i - start);
      ItemMetrics m;
      m.id = data.ids[i];
      m.type = s.meta.type;
      m.f1 = pixel_f1(class1_probability(o.mask_logits, k), s.mask, threshold);
      const std::size_t pos = s.mask.count();
      if (pos > 0 && pos < s.mask.size()) m.auc = auc(class1_margin(o.mask_logits, k), s.mask);
      out.items.push_back(std::move(m));
    }
  }
  double f1 = 0.0, a = 0.0;
  for (const auto& m : out.items) {
    f1 += m.f1;
    if (m.auc) {
      a += *m.auc;
      ++out.auc_count;
    }
  }
  out.mean_f1 = out.items.empty() ? 0.0 : f1 / static_cast<double>(out.items.size());
  out.mean_auc = out.auc_count == 0 ? 0.0 : a / static_cast<double>(out.auc_count);
  return out;
}

struct SweepCurve {
  DegradationKind kind;
  std::vector<EvalSummary> points;  // in configured (increasing severity) order
  std::vector<double> params;

  // Mean F1 never rises as severity increases.
  bool monotone_f1(double tol = 0.0) const {
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].mean_f1 > points[i - 1].mean_f1 + tol) return false;
    return true;
  }
};

inline std::vector<SweepCurve> run_sweep(const Model& model, const Dataset& data, double threshold,
                                         const SweepConfig& sweep) {
  std::vector<SweepCurve> curves;
  const std::pair<DegradationKind, const std::vector<double>*> kinds[] = {
      {DegradationKind::gaussian_blur, &sweep.gaussian_blur},
      {DegradationKind::gaussian_noise, &sweep.gaussian_noise},
      {DegradationKind::resize, &sweep.resize},
      {DegradationKind::jpeg_like, &sweep.jpeg_like}};
  for (const auto& [kind, params] : kinds) {
    if (params->empty()) continue;
    SweepCurve c{kind, {}, *params};
    for (double p : *params) c.points.push_back(evaluate(model, data, threshold, DegradationSpec{kind, p}));
    curves.push_back(std::move(c));
  }
  return curves;
}

}  // namespace ffrt
