#include "uncage/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uncage {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ProbabilityMap sigmoid(const ScalarMap& logits) {
  ScalarMap out(logits.width(), logits.height());
  const std::vector<double>& in = logits.data();
  for (std::size_t i = 0; i < in.size(); ++i) out.data()[i] = sigmoid(in[i]);
  return ProbabilityMap::from_raw(out);
}

void FusionParams::validate() const {
  if (!std::isfinite(confidence_boost) || confidence_boost < 0.0)
    throw std::invalid_argument("confidence boost must be finite and >= 0");
  if (!std::isfinite(mask_threshold) || !(mask_threshold > 0.0) ||
      !(mask_threshold < 1.0))
    throw std::invalid_argument("mask threshold must be inside (0,1)");
  if (dilate_kernel < 1 || dilate_kernel % 2 == 0)
    throw std::invalid_argument("dilation kernel must be odd and >= 1");
  if (dilate_iterations < 0)
    throw std::invalid_argument("dilation iterations must be >= 0");
}

ProbabilityMap fuse_probability(const ProbabilityMap& base,
                                const ProbabilityMap& confidence,
                                double boost) {
  if (!base.same_shape(confidence))
    throw std::invalid_argument("probability map dimensions mismatch");
  if (!std::isfinite(boost) || boost < 0.0)
    throw std::invalid_argument("confidence boost must be finite and >= 0");
  ScalarMap out(base.width(), base.height());
  for (std::size_t i = 0; i < out.data().size(); ++i)
    out.data()[i] = base.data()[i] + confidence.data()[i] * boost;
  return ProbabilityMap::from_raw(out);
}

BinaryMask threshold_mask(const ProbabilityMap& prob, double threshold) {
  if (!std::isfinite(threshold))
    throw std::invalid_argument("mask threshold must be finite");
  BinaryMask mask(prob.width(), prob.height());
  for (std::size_t i = 0; i < prob.data().size(); ++i)
    mask.data()[i] = prob.data()[i] > threshold ? 1 : 0;
  return mask;
}

BinaryMask fuse_mask(const ProbabilityMap& base,
                     const ProbabilityMap& confidence,
                     const FusionParams& params) {
  params.validate();
  return threshold_mask(
      fuse_probability(base, confidence, params.confidence_boost),
      params.mask_threshold);
}

BinaryMask dilate(const BinaryMask& mask, int kernel, int iterations) {
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("dilation kernel must be odd and >= 1");
  if (iterations < 0)
    throw std::invalid_argument("dilation iterations must be >= 0");
  const int radius = kernel / 2;
  if (radius == 0 || iterations == 0) return mask;

  const int w = mask.width(), h = mask.height();
  BinaryMask cur = mask;
  BinaryMask tmp(w, h);
  // Square structuring element separates into a horizontal and a vertical
  // running-OR pass.
  for (int it = 0; it < iterations; ++it) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
        bool any = false;
        for (int xx = x0; xx <= x1 && !any; ++xx) any = cur.at(xx, y);
        tmp.set(x, y, any);
      }
    }
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
        bool any = false;
        for (int yy = y0; yy <= y1 && !any; ++yy) any = tmp.at(x, yy);
        cur.set(x, y, any);
      }
    }
  }
  return cur;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("mask dimensions mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const bool va = a.data()[i] != 0, vb = b.data()[i] != 0;
    inter += (va && vb) ? 1 : 0;
    uni += (va || vb) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace uncage
