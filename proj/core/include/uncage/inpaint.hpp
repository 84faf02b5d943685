#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "uncage/image.hpp"

namespace uncage {

struct InpaintParams {
  int patch_size = 7;   // odd, >= 3
  int pyramid_levels = 0; // 0 = derive from size: halve while min side stays >= 32
  int iterations_per_level = 5;
  double search_decay = 0.5; // in (0,1)
  std::uint64_t rng_seed = 42;

  void validate() const;
};

/// Nearest-neighbor field over one pyramid level. Masked pixels carry a
/// searched source patch center; unmasked pixels are their own source with
/// cost 0. While at least one fully-unmasked, fully-in-bounds patch window
/// exists, searched offsets point only at such windows; degenerate masks
/// fall back to bare unmasked pixels.
struct NnfField {
  int width = 0;
  int height = 0;
  std::vector<int> offset_x, offset_y; // absolute source coordinates
  std::vector<double> cost;

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  /// Sum of per-pixel costs over masked target pixels.
  double total_cost(const BinaryMask& mask) const;
};

struct PyramidLevel {
  RasterImage image;
  BinaryMask mask;
};

/// Coarse-to-fine stack; element 0 is full resolution. Each coarser pixel
/// averages its unmasked children and is masked only when all children are
/// masked.
std::vector<PyramidLevel> build_pyramid(const RasterImage& img,
                                        const BinaryMask& mask,
                                        const InpaintParams& params);

/// Patch centers usable as match sources: all centers whose full patch
/// window is in bounds and unmasked, or — when no such center exists —
/// all unmasked pixels. Scan order (y, then x).
std::vector<std::pair<int, int>> valid_sources(const BinaryMask& mask,
                                               int patch_size);

/// Mean squared sample difference between the patches centered at (tx,ty)
/// and (sx,sy). Only positions where both patches are in bounds and
/// unmasked contribute (summed over channels, normalized by contributing
/// position count); no contributing position -> 0. Masked pixel values are
/// never read, so the cost is independent of any fill in progress.
double patch_cost(const RasterImage& img, const BinaryMask& mask,
                  int patch_size, int tx, int ty, int sx, int sy);

/// Randomized nearest-neighbor search at one pyramid level: random
/// initialization, then iterations_per_level passes of alternating-scan
/// propagation and exponentially decayed random search. Acceptance is
/// strictly cost-decreasing, so total cost never increases across passes.
NnfField nnf_search(const RasterImage& img, const BinaryMask& mask,
                    const InpaintParams& params, int level);

/// Fills masked pixels by coarse-to-fine PatchMatch with Gaussian-weighted
/// patch voting (sigma = patch_size/3). Unmasked pixels pass through
/// bit-identical; output is deterministic given rng_seed.
RasterImage inpaint(const RasterImage& img, const BinaryMask& mask,
                    const InpaintParams& params);

} // namespace uncage
