#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "ffrt/core/mask.hpp"
#include "ffrt/numerics/tensor.hpp"

namespace ffrt {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

// A pixel is predicted manipulated when its probability exceeds threshold.
inline Confusion confusion(std::span<const double> prob, const Mask& gt, double threshold = 0.5) {
  require(prob.size() == gt.size(), ErrorKind::dimension, "confusion: ", prob.size(), " scores for ", gt.size(),
          " pixels");
  Confusion c;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const bool p = prob[i] > threshold, t = gt.bits[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double f1_from(const Confusion& c) {
  const double tp = static_cast<double>(c.tp);
  const double p = c.tp + c.fp > 0 ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
  const double r = c.tp + c.fn > 0 ? tp / static_cast<double>(c.tp + c.fn) : 0.0;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

inline double pixel_f1(std::span<const double> prob, const Mask& gt, double threshold = 0.5) {
  return f1_from(confusion(prob, gt, threshold));
}

// Mann-Whitney: P(score_pos > score_neg) + P(tie) / 2, using midranks.
inline double auc(std::span<const double> scores, const Mask& gt) {
  require(scores.size() == gt.size(), ErrorKind::dimension, "auc: ", scores.size(), " scores for ", gt.size(),
          " pixels");
  const std::size_t n = scores.size();
  const std::size_t pos = gt.count();
  const std::size_t neg = n - pos;
  require(pos > 0 && neg > 0, ErrorKind::undefined_metric, "auc: ground truth has a single class (", pos,
          " positive, ", neg, " negative)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of positive ranks, doubled to stay in integers: ties share 2*midrank = first + last.
  unsigned long long rank2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    std::size_t npos = 0;
    for (std::size_t k = i; k < j; ++k) npos += gt.bits[order[k]] != 0;
    rank2 += static_cast<unsigned long long>(npos) * ((i + 1) + j);
    i = j;
  }
  const double pp = static_cast<double>(pos);
  const double u2 = static_cast<double>(rank2) - pp * (pp + 1.0);  // 2U
  return u2 / (2.0 * pp * static_cast<double>(neg));
}

// Manipulated-class probability from 2-channel logits, batch item n.
inline std::vector<double> class1_probability(const Tensor& logits, int n) {
  const Shape s = logits.shape();
  require(s.c == 2, ErrorKind::dimension, "class1_probability: expected 2 channels, got ", s.c);
  std::vector<double> p(s.plane());
  const double* z0 = logits.plane(n, 0);
  const double* z1 = logits.plane(n, 1);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(z0[i] - z1[i]));
  return p;
}

}  // namespace ffrt
