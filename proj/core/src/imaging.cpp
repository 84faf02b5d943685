#include "uncage/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uncage {

ScalarMap to_luma(const RasterImage& img) {
  ScalarMap out(img.width(), img.height());
  if (img.channels() == 1) {
    out.data() = img.data();
    return out;
  }
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(x, y) = luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
  return out;
}

namespace {

struct TapWeights {
  int i0, i1;
  double frac;
};

// Half-pixel-center source position for destination index i, edge-clamped.
TapWeights tap_for(int i, int src_size, double scale) {
  double pos = (i + 0.5) * scale - 0.5;
  double fl = std::floor(pos);
  int i0 = static_cast<int>(fl);
  double frac = pos - fl;
  int i1 = i0 + 1;
  if (i0 < 0) { i0 = 0; i1 = 0; frac = 0.0; }
  if (i1 > src_size - 1) { i1 = src_size - 1; if (i0 > i1) i0 = i1; }
  if (i0 == i1) frac = 0.0;
  return {i0, i1, frac};
}

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

template <typename GetFn>
void resize_plane(int src_w, int src_h, int dst_w, int dst_h, int channels,
                  const GetFn& get, std::vector<double>& out) {
  const double sx = static_cast<double>(src_w) / dst_w;
  const double sy = static_cast<double>(src_h) / dst_h;
  std::vector<TapWeights> xs(dst_w);
  for (int x = 0; x < dst_w; ++x) xs[x] = tap_for(x, src_w, sx);
  std::size_t o = 0;
  for (int y = 0; y < dst_h; ++y) {
    TapWeights ty = tap_for(y, src_h, sy);
    for (int x = 0; x < dst_w; ++x) {
      const TapWeights& tx = xs[x];
      for (int c = 0; c < channels; ++c) {
        double top = lerp(get(tx.i0, ty.i0, c), get(tx.i1, ty.i0, c), tx.frac);
        double bot = lerp(get(tx.i0, ty.i1, c), get(tx.i1, ty.i1, c), tx.frac);
        out[o++] = lerp(top, bot, ty.frac);
      }
    }
  }
}

} // namespace

RasterImage resize_bilinear(const RasterImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1)
    throw std::invalid_argument("resize target dimensions must be >= 1");
  if (target_w == img.width() && target_h == img.height())
    return img;
  std::vector<double> out(static_cast<std::size_t>(target_w) * target_h *
                          img.channels());
  resize_plane(img.width(), img.height(), target_w, target_h, img.channels(),
               [&](int x, int y, int c) { return img.at(x, y, c); }, out);
  return RasterImage(target_w, target_h, img.channels(), std::move(out));
}

ScalarMap resize_bilinear(const ScalarMap& map, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1)
    throw std::invalid_argument("resize target dimensions must be >= 1");
  if (target_w == map.width() && target_h == map.height())
    return map;
  std::vector<double> out(static_cast<std::size_t>(target_w) * target_h);
  resize_plane(map.width(), map.height(), target_w, target_h, 1,
               [&](int x, int y, int) { return map.at(x, y); }, out);
  return ScalarMap(target_w, target_h, std::move(out));
}

RasterImage adjust_photometric(const RasterImage& img, double brightness_delta,
                               double contrast_factor,
                               double saturation_factor) {
  if (img.channels() < 3)
    throw std::invalid_argument(
        "adjust_photometric requires an RGB or RGBA image");
  if (!std::isfinite(brightness_delta) || !std::isfinite(contrast_factor) ||
      !std::isfinite(saturation_factor))
    throw std::invalid_argument("photometric parameters must be finite");

  const bool do_brightness = brightness_delta != 0.0;
  const bool do_contrast = contrast_factor != 1.0;
  const bool do_saturation = saturation_factor != 1.0;
  const double delta = brightness_delta / 255.0;

  RasterImage out = img;
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double rgb[3] = {out.at(x, y, 0), out.at(x, y, 1), out.at(x, y, 2)};
      if (do_brightness)
        for (double& v : rgb) v += delta;
      if (do_contrast)
        for (double& v : rgb) v = 0.5 + (v - 0.5) * contrast_factor;
      if (do_saturation) {
        double lum = luma(rgb[0], rgb[1], rgb[2]);
        for (double& v : rgb) v = lum + (v - lum) * saturation_factor;
      }
      if (do_brightness || do_contrast || do_saturation)
        for (double& v : rgb) v = std::min(1.0, std::max(0.0, v));
      out.at(x, y, 0) = rgb[0];
      out.at(x, y, 1) = rgb[1];
      out.at(x, y, 2) = rgb[2];
    }
  }
  return out;
}

ProbabilityMap clamp01(const ScalarMap& map) {
  return ProbabilityMap::from_raw(map);
}

ProbabilityMap clamp01(const ProbabilityMap& map) {
  return ProbabilityMap::from_raw(map.as_scalar());
}

} // namespace uncage
