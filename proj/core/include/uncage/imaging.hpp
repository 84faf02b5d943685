#pragma once

#include "uncage/image.hpp"

namespace uncage {

// Rec.601 luma weights. The saturation adjustment and RGB->gray conversion
// both use these; recorded in run manifests for reproducibility.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline double luma(double r, double g, double b) {
  return r * kLumaR + g * kLumaG + b * kLumaB;
}

/// Collapses an image to a single luma channel (identity for 1-channel input).
ScalarMap to_luma(const RasterImage& img);

/// Bilinear resize with edge-clamped sampling and half-pixel-center
/// alignment. Channel count is preserved; identical target dims copy the
/// input bit-exactly.
RasterImage resize_bilinear(const RasterImage& img, int target_w, int target_h);
ScalarMap resize_bilinear(const ScalarMap& map, int target_w, int target_h);

/// Photometric adjustment of the color channels (alpha untouched):
///   brightness: v += delta/255        (delta in 8-bit units)
///   contrast:   v  = 0.5 + (v-0.5)*f  (scaling around mid-gray)
///   saturation: v  = luma + (v-luma)*f
/// applied in that order, then clamped to [0,1]. Identity parameters
/// (0, 1, 1) skip their stage, so the whole call is bit-exact identity.
/// Single-channel input is rejected.
RasterImage adjust_photometric(const RasterImage& img, double brightness_delta,
                               double contrast_factor, double saturation_factor);

/// Elementwise min(1, max(0, v)).
ProbabilityMap clamp01(const ScalarMap& map);
ProbabilityMap clamp01(const ProbabilityMap& map);

} // namespace uncage
