#include "uncage/gabor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uncage/imaging.hpp"

namespace uncage {

namespace {

constexpr int kOrientationBatch = 6;

// Image extended by `radius` on every side with edge replication.
ScalarMap pad_replicate(const ScalarMap& img, int radius) {
  const int w = img.width(), h = img.height();
  ScalarMap out(w + 2 * radius, h + 2 * radius);
  for (int y = 0; y < h + 2 * radius; ++y) {
    int sy = std::clamp(y - radius, 0, h - 1);
    for (int x = 0; x < w + 2 * radius; ++x) {
      int sx = std::clamp(x - radius, 0, w - 1);
      out.at(x, y) = img.at(sx, sy);
    }
  }
  return out;
}

// Mean-subtracted copies of the bank kernels; shared by both paths so the
// batched/naive comparison exercises only the convolution loops.
std::vector<GaborKernel> zero_mean_bank(const GaborParams& params) {
  std::vector<GaborKernel> bank = make_bank(params);
  for (GaborKernel& k : bank) {
    double sum = 0.0;
    for (double w : k.weights) sum += w;
    const double mean = sum / static_cast<double>(k.weights.size());
    for (double& w : k.weights) w -= mean;
  }
  return bank;
}

void check_response_input(const ScalarMap& img, const GaborParams& params) {
  params.validate();
  const int ksize = 2 * params.kernel_radius + 1;
  if (img.width() < ksize || img.height() < ksize)
    throw std::invalid_argument("image is smaller than the Gabor kernel");
}

// Finalizes max_response / theta_best / variance from the response stack.
void reduce_bank_result(GaborBankResult& r) {
  const int w = r.responses[0].width(), h = r.responses[0].height();
  r.max_response = ScalarMap(w, h);
  r.theta_best = ScalarMap(w, h);
  const std::size_t n = r.responses[0].data().size();
  std::vector<int> best_idx(n, 0);
  std::vector<double>& maxv = r.max_response.data();
  maxv = r.responses[0].data();
  for (std::size_t k = 1; k < r.responses.size(); ++k) {
    const std::vector<double>& resp = r.responses[k].data();
    for (std::size_t i = 0; i < n; ++i) {
      if (resp[i] > maxv[i]) { // strict: ties keep the lowest index
        maxv[i] = resp[i];
        best_idx[i] = static_cast<int>(k);
      }
    }
  }
  std::vector<double>& tb = r.theta_best.data();
  for (std::size_t i = 0; i < n; ++i) tb[i] = r.thetas[best_idx[i]];
  r.variance = confidence_variance(r);
}

} // namespace

void GaborParams::validate() const {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || !(lambda > 0.0) ||
      !std::isfinite(sigma_x) || !std::isfinite(sigma_y) ||
      !std::isfinite(lambda) || !std::isfinite(phi))
    throw std::invalid_argument("Gabor parameters must be finite and positive");
  if (n_orientations < 2)
    throw std::invalid_argument("Gabor bank needs at least 2 orientations");
  if (kernel_radius < 1)
    throw std::invalid_argument("Gabor kernel radius must be >= 1");
}

int auto_kernel_radius(double sigma_x, double sigma_y) {
  return static_cast<int>(std::ceil(3.0 * std::max(sigma_x, sigma_y)));
}

GaborKernel make_kernel(const GaborParams& params, double theta) {
  params.validate();
  if (!std::isfinite(theta))
    throw std::invalid_argument("Gabor orientation must be finite");

  GaborKernel k;
  k.radius = params.kernel_radius;
  k.theta = theta;
  const int size = k.size();
  k.weights.resize(static_cast<std::size_t>(size) * size);

  // The phi = 0 kernel is pi-periodic in theta, so reduce the angle before
  // sampling; theta and theta + pi then produce identical weights (libm
  // sin/cos are not symmetric under the shift on their own).
  double th = theta;
  if (params.phi == 0.0) {
    th = std::fmod(th, std::numbers::pi);
    if (th < 0.0) th += std::numbers::pi;
  }
  const double ct = std::cos(th), st = std::sin(th);
  const double inv_sx2 = 1.0 / (params.sigma_x * params.sigma_x);
  const double inv_sy2 = 1.0 / (params.sigma_y * params.sigma_y);
  const double carrier = 2.0 * std::numbers::pi / params.lambda;

  std::size_t i = 0;
  for (int y = -k.radius; y <= k.radius; ++y) {
    for (int x = -k.radius; x <= k.radius; ++x, ++i) {
      const double xr = x * ct + y * st;
      const double yr = -x * st + y * ct;
      k.weights[i] = std::exp(-0.5 * (xr * xr * inv_sx2 + yr * yr * inv_sy2)) *
                     std::cos(carrier * xr + params.phi);
    }
  }
  return k;
}

std::vector<GaborKernel> make_bank(const GaborParams& params) {
  params.validate();
  std::vector<GaborKernel> bank;
  bank.reserve(params.n_orientations);
  for (int k = 0; k < params.n_orientations; ++k) {
    double theta = std::numbers::pi * k / params.n_orientations;
    bank.push_back(make_kernel(params, theta));
  }
  return bank;
}

double orient_diff(double theta_best, double theta) {
  const double d = theta_best - theta;
  const double pi = std::numbers::pi;
  return std::min({std::fabs(d), std::fabs(d - pi), std::fabs(d + pi)});
}

GaborBankResult bank_response(const ScalarMap& img_gray,
                              const GaborParams& params) {
  check_response_input(img_gray, params);
  const std::vector<GaborKernel> bank = zero_mean_bank(params);
  const int r = params.kernel_radius;
  const int ksize = 2 * r + 1;
  const int w = img_gray.width(), h = img_gray.height();
  const ScalarMap padded = pad_replicate(img_gray, r);
  const int pw = padded.width();

  GaborBankResult result;
  result.thetas.reserve(bank.size());
  for (const GaborKernel& k : bank) result.thetas.push_back(k.theta);
  result.responses.assign(bank.size(), ScalarMap(w, h));

  // Row-blocked correlation: for each batch of kernels, accumulate one
  // output row at a time as a sequence of weight*shifted-row updates. The
  // per-orientation tap order is (ky, kx), identical to the reference path,
  // so both paths produce bit-identical sums.
  std::vector<std::vector<double>> acc(kOrientationBatch,
                                       std::vector<double>(w));
  for (std::size_t k0 = 0; k0 < bank.size(); k0 += kOrientationBatch) {
    const int nb = static_cast<int>(
        std::min<std::size_t>(kOrientationBatch, bank.size() - k0));
    for (int y = 0; y < h; ++y) {
      for (int j = 0; j < nb; ++j)
        std::fill(acc[j].begin(), acc[j].end(), 0.0);
      for (int ky = 0; ky < ksize; ++ky) {
        const double* src =
            padded.data().data() + static_cast<std::size_t>(y + ky) * pw;
        for (int kx = 0; kx < ksize; ++kx) {
          const double* s = src + kx;
          for (int j = 0; j < nb; ++j) {
            const double wk =
                bank[k0 + j].weights[static_cast<std::size_t>(ky) * ksize + kx];
            double* a = acc[j].data();
            for (int x = 0; x < w; ++x) a[x] += wk * s[x];
          }
        }
      }
      for (int j = 0; j < nb; ++j) {
        double* out = result.responses[k0 + j].data().data() +
                      static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) out[x] = std::fabs(acc[j][x]);
      }
    }
  }

  reduce_bank_result(result);
  return result;
}

GaborBankResult bank_response(const RasterImage& img,
                              const GaborParams& params) {
  return bank_response(to_luma(img), params);
}

GaborBankResult bank_response_reference(const ScalarMap& img_gray,
                                        const GaborParams& params) {
  check_response_input(img_gray, params);
  const std::vector<GaborKernel> bank = zero_mean_bank(params);
  const int r = params.kernel_radius;
  const int ksize = 2 * r + 1;
  const int w = img_gray.width(), h = img_gray.height();
  const ScalarMap padded = pad_replicate(img_gray, r);

  GaborBankResult result;
  result.thetas.reserve(bank.size());
  for (const GaborKernel& k : bank) result.thetas.push_back(k.theta);
  result.responses.assign(bank.size(), ScalarMap(w, h));

  for (std::size_t k = 0; k < bank.size(); ++k) {
    const std::vector<double>& wk = bank[k].weights;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double sum = 0.0;
        for (int ky = 0; ky < ksize; ++ky)
          for (int kx = 0; kx < ksize; ++kx)
            sum += wk[static_cast<std::size_t>(ky) * ksize + kx] *
                   padded.at(x + kx, y + ky);
        result.responses[k].at(x, y) = std::fabs(sum);
      }
    }
  }

  reduce_bank_result(result);
  return result;
}

ScalarMap confidence_variance(const GaborBankResult& result) {
  if (result.responses.empty())
    throw std::invalid_argument("bank result has no responses");
  const int w = result.responses[0].width();
  const int h = result.responses[0].height();
  const std::size_t n = result.responses[0].data().size();

  std::vector<double> sum(n, 0.0);
  for (std::size_t k = 0; k < result.responses.size(); ++k) {
    const double theta_k = result.thetas[k];
    const std::vector<double>& resp = result.responses[k].data();
    const std::vector<double>& maxv = result.max_response.data();
    const std::vector<double>& tb = result.theta_best.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = resp[i] - maxv[i];
      sum[i] += orient_diff(tb[i], theta_k) * dev * dev;
    }
  }
  for (double& v : sum) v = std::sqrt(v);
  return ScalarMap(w, h, std::move(sum));
}

ProbabilityMap gabor_confidence(const ScalarMap& variance, double threshold_low,
                                double threshold_high) {
  if (!(threshold_high > threshold_low))
    throw std::invalid_argument(
        "confidence threshold_high must exceed threshold_low");
  const double span = threshold_high - threshold_low;
  ScalarMap raw(variance.width(), variance.height());
  for (std::size_t i = 0; i < raw.data().size(); ++i)
    raw.data()[i] = (variance.data()[i] - threshold_low) / span;
  return ProbabilityMap::from_raw(raw);
}

ScalarMap rescale_by_max(const ScalarMap& map) {
  double maxv = 0.0;
  for (double v : map.data()) maxv = std::max(maxv, v);
  if (!(maxv > 0.0)) return map;
  ScalarMap out = map;
  for (double& v : out.data()) v /= maxv;
  return out;
}

std::pair<ScalarMap, ScalarMap> orientation_channels(
    const GaborBankResult& result, const ProbabilityMap& confidence,
    double gate) {
  if (gate < 0.0 || gate > 1.0)
    throw std::invalid_argument("orientation gate must be in [0,1]");
  const int w = result.theta_best.width(), h = result.theta_best.height();
  if (confidence.width() != w || confidence.height() != h)
    throw std::invalid_argument("confidence map dimensions mismatch");
  ScalarMap sin_map(w, h), cos_map(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (confidence.at(x, y) >= gate) {
        sin_map.at(x, y) = std::sin(result.theta_best.at(x, y));
        cos_map.at(x, y) = std::cos(result.theta_best.at(x, y));
      }
    }
  }
  return {std::move(sin_map), std::move(cos_map)};
}

} // namespace uncage
