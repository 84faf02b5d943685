#include "uncage/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <stdexcept>

#include "uncage/rng.hpp"

namespace uncage {

namespace {

constexpr int kPyramidMinSide = 32;
const char* const kNnfStreamTag = "nnf";

struct SourceDomain {
  bool strict = false; // centers have fully-unmasked in-bounds windows
  std::vector<std::pair<int, int>> centers;
  std::vector<std::uint8_t> valid; // per-pixel membership grid
};

SourceDomain find_sources(const BinaryMask& mask, int patch_size) {
  const int w = mask.width(), h = mask.height();
  const int r = patch_size / 2;
  SourceDomain dom;
  dom.valid.assign(static_cast<std::size_t>(w) * h, 0);

  // Column-count integral image over the mask for O(1) window tests.
  std::vector<std::uint32_t> integral(static_cast<std::size_t>(w + 1) * (h + 1),
                                      0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      integral[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
          integral[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] +
          integral[static_cast<std::size_t>(y + 1) * (w + 1) + x] -
          integral[static_cast<std::size_t>(y) * (w + 1) + x] +
          (mask.at(x, y) ? 1u : 0u);
  auto window_masked = [&](int x0, int y0, int x1, int y1) {
    return integral[static_cast<std::size_t>(y1 + 1) * (w + 1) + (x1 + 1)] -
           integral[static_cast<std::size_t>(y0) * (w + 1) + (x1 + 1)] -
           integral[static_cast<std::size_t>(y1 + 1) * (w + 1) + x0] +
           integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
  };

  for (int y = r; y + r < h; ++y)
    for (int x = r; x + r < w; ++x)
      if (window_masked(x - r, y - r, x + r, y + r) == 0) {
        dom.valid[static_cast<std::size_t>(y) * w + x] = 1;
        dom.centers.emplace_back(x, y);
      }
  if (!dom.centers.empty()) {
    dom.strict = true;
    return dom;
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!mask.at(x, y)) {
        dom.valid[static_cast<std::size_t>(y) * w + x] = 1;
        dom.centers.emplace_back(x, y);
      }
  return dom;
}

std::vector<std::pair<int, int>> masked_pixels(const BinaryMask& mask) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) out.emplace_back(x, y);
  return out;
}

// Fills hole colors layer by layer from the boundary inward; each pixel
// averages its already-resolved 8-neighbors. Gives non-degenerate values
// for voting to read when holes are too large for clean source patches.
void onion_peel(RasterImage& img, const BinaryMask& mask) {
  const int w = img.width(), h = img.height(), c = img.channels();
  constexpr int kInf = -1;
  std::vector<int> dist(static_cast<std::size_t>(w) * h, kInf);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!mask.at(x, y)) {
        dist[static_cast<std::size_t>(y) * w + x] = 0;
        queue.emplace_back(x, y);
      }
  if (queue.empty() || queue.size() == static_cast<std::size_t>(w) * h) return;
  int max_dist = 0;
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    const int d = dist[static_cast<std::size_t>(y) * w + x];
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        int& nd = dist[static_cast<std::size_t>(ny) * w + nx];
        if (nd == kInf) {
          nd = d + 1;
          max_dist = std::max(max_dist, nd);
          queue.emplace_back(nx, ny);
        }
      }
  }
  std::vector<double> acc(c);
  for (int d = 1; d <= max_dist; ++d)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (dist[static_cast<std::size_t>(y) * w + x] != d) continue;
        std::fill(acc.begin(), acc.end(), 0.0);
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (dist[static_cast<std::size_t>(ny) * w + nx] >= d) continue;
            for (int ch = 0; ch < c; ++ch) acc[ch] += img.at(nx, ny, ch);
            ++n;
          }
        for (int ch = 0; ch < c; ++ch) img.at(x, y, ch) = acc[ch] / n;
      }
}

std::vector<int> search_radii(int w, int h, double decay) {
  std::vector<int> radii;
  double r = std::max(w, h);
  while (r >= 1.0) {
    radii.push_back(static_cast<int>(r));
    r *= decay;
  }
  return radii;
}

void init_random(NnfField& field, const BinaryMask& mask,
                 const SourceDomain& dom, const RasterImage& img,
                 int patch_size, Xorshift64Star& rng) {
  const int w = mask.width(), h = mask.height();
  field.width = w;
  field.height = h;
  field.offset_x.resize(static_cast<std::size_t>(w) * h);
  field.offset_y.resize(static_cast<std::size_t>(w) * h);
  field.cost.assign(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = field.index(x, y);
      if (!mask.at(x, y)) {
        field.offset_x[i] = x;
        field.offset_y[i] = y;
        continue;
      }
      const auto [sx, sy] =
          dom.centers[static_cast<std::size_t>(rng.next_below(
              static_cast<std::uint64_t>(dom.centers.size())))];
      field.offset_x[i] = sx;
      field.offset_y[i] = sy;
      field.cost[i] = patch_cost(img, mask, patch_size, x, y, sx, sy);
    }
}

void run_level(const RasterImage& img, const BinaryMask& mask,
               const InpaintParams& params, const SourceDomain& dom,
               NnfField& field, Xorshift64Star& rng) {
  const int w = img.width(), h = img.height();
  const std::vector<std::pair<int, int>> targets = masked_pixels(mask);
  const std::vector<int> radii = search_radii(w, h, params.search_decay);

  auto try_accept = [&](int x, int y, int sx, int sy) {
    if (sx < 0 || sy < 0 || sx >= w || sy >= h) return;
    if (!dom.valid[static_cast<std::size_t>(sy) * w + sx]) return;
    const std::size_t i = field.index(x, y);
    const double c = patch_cost(img, mask, params.patch_size, x, y, sx, sy);
    if (c < field.cost[i]) {
      field.offset_x[i] = sx;
      field.offset_y[i] = sy;
      field.cost[i] = c;
    }
  };

  for (int iter = 0; iter < params.iterations_per_level; ++iter) {
    const bool forward = iter % 2 == 0;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(targets.size());
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const auto [x, y] = targets[forward ? k : n - 1 - k];
      const std::size_t i = field.index(x, y);
      // Propagate from the two scan-order predecessors.
      const int step = forward ? -1 : 1;
      const std::pair<int, int> neighbors[2] = {{x + step, y}, {x, y + step}};
      for (const auto& [nx, ny] : neighbors) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = field.index(nx, ny);
        try_accept(x, y, field.offset_x[j] + (x - nx),
                   field.offset_y[j] + (y - ny));
      }
      // Random search around the current best, shrinking windows. The two
      // draws happen per radius regardless of candidate validity, so the
      // stream position depends only on the target list.
      for (const int radius : radii) {
        const int span = 2 * radius + 1;
        const int dx = static_cast<int>(rng.next_below(span)) - radius;
        const int dy = static_cast<int>(rng.next_below(span)) - radius;
        try_accept(x, y, field.offset_x[i] + dx, field.offset_y[i] + dy);
      }
    }
  }
}

// Blends each masked pixel from every masked patch center within the patch
// radius: center q proposes the source sample at f(q) + (p - q), weighted
// by a Gaussian in |p - q|. Identical votes short-circuit to an exact copy
// so constant regions reproduce bit-for-bit.
void vote(RasterImage& img, const BinaryMask& mask, const NnfField& field,
          int patch_size) {
  const int w = img.width(), h = img.height(), c = img.channels();
  const int r = patch_size / 2;
  const double sigma = patch_size / 3.0;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const RasterImage src = img;

  std::vector<double> acc(c), first(c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      std::fill(acc.begin(), acc.end(), 0.0);
      double weight_sum = 0.0;
      bool any = false, all_same = true;
      for (int qy = y - r; qy <= y + r; ++qy)
        for (int qx = x - r; qx <= x + r; ++qx) {
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          if (!mask.at(qx, qy)) continue;
          const std::size_t j = field.index(qx, qy);
          const int sx = field.offset_x[j] + (x - qx);
          const int sy = field.offset_y[j] + (y - qy);
          if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
          const double d2 = static_cast<double>((x - qx) * (x - qx) +
                                                (y - qy) * (y - qy));
          const double wgt = std::exp(-d2 * inv_two_sigma2);
          if (!any) {
            for (int ch = 0; ch < c; ++ch) first[ch] = src.at(sx, sy, ch);
            any = true;
          } else if (all_same) {
            for (int ch = 0; ch < c; ++ch)
              if (src.at(sx, sy, ch) != first[ch]) {
                all_same = false;
                break;
              }
          }
          for (int ch = 0; ch < c; ++ch) acc[ch] += wgt * src.at(sx, sy, ch);
          weight_sum += wgt;
        }
      if (!any) continue; // unreachable: the center's own vote always lands
      for (int ch = 0; ch < c; ++ch)
        img.at(x, y, ch) = all_same ? first[ch] : acc[ch] / weight_sum;
    }
}

// Seeds the fine field from the coarse one (doubled offsets, preserved
// parity); invalid landings fall back to a fresh random source.
void upsample_field(const NnfField& coarse, const BinaryMask& coarse_mask,
                    const RasterImage& img, const BinaryMask& mask,
                    const SourceDomain& dom, int patch_size, NnfField& field,
                    Xorshift64Star& rng) {
  const int w = mask.width(), h = mask.height();
  field.width = w;
  field.height = h;
  field.offset_x.resize(static_cast<std::size_t>(w) * h);
  field.offset_y.resize(static_cast<std::size_t>(w) * h);
  field.cost.assign(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = field.index(x, y);
      if (!mask.at(x, y)) {
        field.offset_x[i] = x;
        field.offset_y[i] = y;
        continue;
      }
      int sx = -1, sy = -1;
      const int cx = x / 2, cy = y / 2;
      if (cx < coarse.width && cy < coarse.height && coarse_mask.at(cx, cy)) {
        const std::size_t j = coarse.index(cx, cy);
        sx = 2 * coarse.offset_x[j] + (x & 1);
        sy = 2 * coarse.offset_y[j] + (y & 1);
      }
      if (sx < 0 || sy < 0 || sx >= w || sy >= h ||
          !dom.valid[static_cast<std::size_t>(sy) * w + sx]) {
        const auto [rx, ry] =
            dom.centers[static_cast<std::size_t>(rng.next_below(
                static_cast<std::uint64_t>(dom.centers.size())))];
        sx = rx;
        sy = ry;
      }
      field.offset_x[i] = sx;
      field.offset_y[i] = sy;
      field.cost[i] = patch_cost(img, mask, patch_size, x, y, sx, sy);
    }
}

void check_inpaint_input(const RasterImage& img, const BinaryMask& mask,
                         const InpaintParams& params) {
  params.validate();
  if (img.width() != mask.width() || img.height() != mask.height())
    throw std::invalid_argument("image and mask dimensions mismatch");
  if (mask.count_true() ==
      static_cast<std::size_t>(img.width()) * img.height())
    throw std::invalid_argument("mask covers the entire image");
}

} // namespace

void InpaintParams::validate() const {
  if (patch_size < 3 || patch_size % 2 == 0)
    throw std::invalid_argument("patch size must be odd and >= 3");
  if (pyramid_levels < 0)
    throw std::invalid_argument("pyramid level count must be >= 0");
  if (iterations_per_level < 1)
    throw std::invalid_argument("iteration count must be >= 1");
  if (!(search_decay > 0.0) || !(search_decay < 1.0))
    throw std::invalid_argument("search decay must be in (0,1)");
}

double NnfField::total_cost(const BinaryMask& mask) const {
  double sum = 0.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (mask.at(x, y)) sum += cost[index(x, y)];
  return sum;
}

std::vector<PyramidLevel> build_pyramid(const RasterImage& img,
                                        const BinaryMask& mask,
                                        const InpaintParams& params) {
  params.validate();
  if (img.width() != mask.width() || img.height() != mask.height())
    throw std::invalid_argument("image and mask dimensions mismatch");

  std::vector<PyramidLevel> levels;
  levels.push_back({img, mask});
  while (params.pyramid_levels == 0 ||
         levels.size() < static_cast<std::size_t>(params.pyramid_levels)) {
    const PyramidLevel& fine = levels.back();
    const int fw = fine.image.width(), fh = fine.image.height();
    const int cw = (fw + 1) / 2, ch = (fh + 1) / 2;
    if (std::min(cw, ch) < kPyramidMinSide) break;

    PyramidLevel coarse{RasterImage(cw, ch, fine.image.channels()),
                        BinaryMask(cw, ch)};
    const int nc = fine.image.channels();
    std::vector<double> acc_unmasked(nc), acc_all(nc);
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        std::fill(acc_unmasked.begin(), acc_unmasked.end(), 0.0);
        std::fill(acc_all.begin(), acc_all.end(), 0.0);
        int n_unmasked = 0, n_all = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int fx = 2 * x + dx, fy = 2 * y + dy;
            if (fx >= fw || fy >= fh) continue;
            ++n_all;
            for (int c = 0; c < nc; ++c)
              acc_all[c] += fine.image.at(fx, fy, c);
            if (!fine.mask.at(fx, fy)) {
              ++n_unmasked;
              for (int c = 0; c < nc; ++c)
                acc_unmasked[c] += fine.image.at(fx, fy, c);
            }
          }
        if (n_unmasked > 0) {
          for (int c = 0; c < nc; ++c)
            coarse.image.at(x, y, c) = acc_unmasked[c] / n_unmasked;
        } else {
          coarse.mask.set(x, y, true);
          for (int c = 0; c < nc; ++c)
            coarse.image.at(x, y, c) = acc_all[c] / n_all;
        }
      }
    levels.push_back(std::move(coarse));
  }
  return levels;
}

std::vector<std::pair<int, int>> valid_sources(const BinaryMask& mask,
                                               int patch_size) {
  if (patch_size < 3 || patch_size % 2 == 0)
    throw std::invalid_argument("patch size must be odd and >= 3");
  return find_sources(mask, patch_size).centers;
}

double patch_cost(const RasterImage& img, const BinaryMask& mask,
                  int patch_size, int tx, int ty, int sx, int sy) {
  const int w = img.width(), h = img.height(), c = img.channels();
  const int r = patch_size / 2;
  double sum = 0.0;
  int count = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const int px = tx + dx, py = ty + dy;
      const int qx = sx + dx, qy = sy + dy;
      if (px < 0 || py < 0 || px >= w || py >= h) continue;
      if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
      if (mask.at(px, py) || mask.at(qx, qy)) continue;
      for (int ch = 0; ch < c; ++ch) {
        const double d = img.at(px, py, ch) - img.at(qx, qy, ch);
        sum += d * d;
      }
      ++count;
    }
  return count > 0 ? sum / count : 0.0;
}

NnfField nnf_search(const RasterImage& img, const BinaryMask& mask,
                    const InpaintParams& params, int level) {
  check_inpaint_input(img, mask, params);
  const std::vector<PyramidLevel> levels = build_pyramid(img, mask, params);
  if (level < 0 || static_cast<std::size_t>(level) >= levels.size())
    throw std::invalid_argument("pyramid level out of range");

  const PyramidLevel& lv = levels[static_cast<std::size_t>(level)];
  const SourceDomain dom = find_sources(lv.mask, params.patch_size);
  Xorshift64Star rng(derive_stream_seed(params.rng_seed, kNnfStreamTag,
                                        static_cast<std::uint64_t>(level)));
  NnfField field;
  init_random(field, lv.mask, dom, lv.image, params.patch_size, rng);
  run_level(lv.image, lv.mask, params, dom, field, rng);
  return field;
}

RasterImage inpaint(const RasterImage& img, const BinaryMask& mask,
                    const InpaintParams& params) {
  check_inpaint_input(img, mask, params);
  if (mask.count_true() == 0) return img;

  std::vector<PyramidLevel> levels = build_pyramid(img, mask, params);
  const int coarsest = static_cast<int>(levels.size()) - 1;

  NnfField field;
  for (int level = coarsest; level >= 0; --level) {
    PyramidLevel& lv = levels[static_cast<std::size_t>(level)];
    const SourceDomain dom = find_sources(lv.mask, params.patch_size);
    Xorshift64Star rng(derive_stream_seed(params.rng_seed, kNnfStreamTag,
                                          static_cast<std::uint64_t>(level)));
    if (level == coarsest) {
      onion_peel(lv.image, lv.mask);
      NnfField init;
      init_random(init, lv.mask, dom, lv.image, params.patch_size, rng);
      field = std::move(init);
    } else {
      const PyramidLevel& up = levels[static_cast<std::size_t>(level) + 1];
      // Seed colors from the coarse solve so degenerate (context-free)
      // votes read something sensible, then seed the field itself.
      for (int y = 0; y < lv.mask.height(); ++y)
        for (int x = 0; x < lv.mask.width(); ++x)
          if (lv.mask.at(x, y))
            for (int c = 0; c < lv.image.channels(); ++c)
              lv.image.at(x, y, c) = up.image.at(
                  std::min(x / 2, up.image.width() - 1),
                  std::min(y / 2, up.image.height() - 1), c);
      NnfField next;
      upsample_field(field, up.mask, lv.image, lv.mask, dom,
                     params.patch_size, next, rng);
      field = std::move(next);
    }
    run_level(lv.image, lv.mask, params, dom, field, rng);
    vote(lv.image, lv.mask, field, params.patch_size);
  }
  return std::move(levels.front().image);
}

} // namespace uncage
