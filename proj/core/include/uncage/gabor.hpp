#pragma once

#include <utility>
#include <vector>

#include "uncage/image.hpp"

namespace uncage {

/// Parameters of the tunable Gabor bank. Defaults are the tuned values
/// sigma_x 1.8, sigma_y 2.4, wavelength 4.0 with 72 orientations over
/// [0, pi) and an even-symmetric kernel (phi = 0).
struct GaborParams {
  double sigma_x = 1.8;
  double sigma_y = 2.4;
  double lambda = 4.0;
  double phi = 0.0;
  int n_orientations = 72;
  int kernel_radius = 8; // see auto_kernel_radius()

  void validate() const;
};

/// ceil(3 * max(sigma_x, sigma_y)) — the 3-sigma truncation radius
/// (8 for the default sigmas).
int auto_kernel_radius(double sigma_x, double sigma_y);

/// One sampled kernel of size (2r+1)x(2r+1), row-major, centered at 0:
///   w(x,y) = exp(-((x'/sx)^2 + (y'/sy)^2) / 2) * cos(2 pi x' / lambda + phi)
///   x' =  x cos(theta) + y sin(theta)
///   y' = -x sin(theta) + y cos(theta)
/// Weights are the raw samples; the bank removes each kernel's mean before
/// convolving so that flat regions respond with zero.
struct GaborKernel {
  int radius = 0;
  double theta = 0.0;
  std::vector<double> weights;

  int size() const { return 2 * radius + 1; }
  double at(int x, int y) const { // x,y in [-radius, radius]
    return weights[static_cast<std::size_t>(y + radius) * size() + (x + radius)];
  }
};

GaborKernel make_kernel(const GaborParams& params, double theta);

/// n_orientations kernels at theta_k = pi * k / n, k = 0 .. n-1.
std::vector<GaborKernel> make_bank(const GaborParams& params);

/// Per-pixel multi-orientation analysis of one frame.
struct GaborBankResult {
  std::vector<ScalarMap> responses; // |image (x) kernel_k|, one per orientation
  ScalarMap max_response;           // max over orientations
  ScalarMap theta_best;             // argmax angle in radians, [0, pi)
  ScalarMap variance;               // orientation-confidence variance
  std::vector<double> thetas;       // bank angles, radians
};

/// Minimum circular distance between two orientations (period pi);
/// result in [0, pi/2].
double orient_diff(double theta_best, double theta);

/// Correlates the luma image against the full bank (edge-replicated borders,
/// kernels mean-subtracted first) and fills every GaborBankResult field.
/// Orientations are processed in batches of six; bank_response_reference
/// computes the same thing with plain per-pixel loops and is kept as the
/// bit-exact check on the batched path.
GaborBankResult bank_response(const ScalarMap& img_gray,
                              const GaborParams& params);
GaborBankResult bank_response(const RasterImage& img, const GaborParams& params);
GaborBankResult bank_response_reference(const ScalarMap& img_gray,
                                        const GaborParams& params);

/// variance(p) = sqrt( sum_theta orient_diff(theta_best(p), theta)
///                     * (response(theta, p) - max_response(p))^2 )
/// Unnormalized; zero wherever responses are orientation-independent.
ScalarMap confidence_variance(const GaborBankResult& result);

/// C = clamp((variance - t_low) / (t_high - t_low), 0, 1).
ProbabilityMap gabor_confidence(const ScalarMap& variance, double threshold_low,
                                double threshold_high);

/// Divides the map by its own maximum (no-op when max <= 0). Applied to the
/// variance before gabor_confidence so the fixed 0.1-0.2 bounds are
/// meaningful across images.
ScalarMap rescale_by_max(const ScalarMap& map);

/// sin/cos orientation channels, zeroed where confidence < gate.
std::pair<ScalarMap, ScalarMap> orientation_channels(
    const GaborBankResult& result, const ProbabilityMap& confidence,
    double gate);

} // namespace uncage
