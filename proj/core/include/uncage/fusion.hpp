#pragma once

#include "uncage/image.hpp"

namespace uncage {

/// Numerically stable logistic 1/(1+exp(-x)).
double sigmoid(double x);

/// Element-wise sigmoid over a logit map.
ProbabilityMap sigmoid(const ScalarMap& logits);

struct FusionParams {
  double confidence_boost = 0.4;
  double mask_threshold = 0.3; // strictly inside (0,1)
  int dilate_kernel = 3;       // square structuring element side, odd
  int dilate_iterations = 1;

  void validate() const;
};

/// Adds confidence-weighted boost to a base probability map and clamps:
///   enhanced = clamp01(base + confidence * boost).
ProbabilityMap fuse_probability(const ProbabilityMap& base,
                                const ProbabilityMap& confidence,
                                double boost);

/// Strict threshold: mask pixel is set iff probability > threshold.
BinaryMask threshold_mask(const ProbabilityMap& prob, double threshold);

/// fuse_probability followed by threshold_mask.
BinaryMask fuse_mask(const ProbabilityMap& base,
                     const ProbabilityMap& confidence,
                     const FusionParams& params);

/// Binary dilation with a square kernel x kernel structuring element
/// (kernel odd), repeated `iterations` times; iterations = 0 is the
/// identity. Windows are clipped at the borders.
BinaryMask dilate(const BinaryMask& mask, int kernel, int iterations = 1);

/// Intersection-over-union of two masks. Both empty -> 1.0.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

} // namespace uncage
