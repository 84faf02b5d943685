#include "uncage/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace uncage {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("image dimensions must be >= 1");
}

void check_finite(const std::vector<double>& data) {
  for (double v : data)
    if (!std::isfinite(v))
      throw std::invalid_argument("image samples must be finite");
}

} // namespace

RasterImage::RasterImage(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height);
  if (channels != 1 && channels != 3 && channels != 4)
    throw std::invalid_argument("channel count must be 1, 3 or 4");
  if (!std::isfinite(fill))
    throw std::invalid_argument("image samples must be finite");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

RasterImage::RasterImage(int width, int height, int channels,
                         std::vector<double> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3 && channels != 4)
    throw std::invalid_argument("channel count must be 1, 3 or 4");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels)
    throw std::invalid_argument("image data size does not match dimensions");
  check_finite(data_);
}

ScalarMap::ScalarMap(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  if (!std::isfinite(fill))
    throw std::invalid_argument("map samples must be finite");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

ScalarMap::ScalarMap(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("map data size does not match dimensions");
  check_finite(data_);
}

ProbabilityMap::ProbabilityMap(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  if (!std::isfinite(fill) || fill < 0.0 || fill > 1.0)
    throw std::invalid_argument("probability fill must be in [0,1]");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

ProbabilityMap ProbabilityMap::from_raw(const ScalarMap& raw) {
  ProbabilityMap out;
  out.width_ = raw.width();
  out.height_ = raw.height();
  out.data_.resize(raw.data().size());
  for (std::size_t i = 0; i < out.data_.size(); ++i) {
    double v = raw.data()[i];
    if (!std::isfinite(v))
      throw std::invalid_argument("probability samples must be finite");
    out.data_[i] = std::min(1.0, std::max(0.0, v));
  }
  return out;
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("mask data size does not match dimensions");
  for (auto& v : data_) v = v ? 1 : 0;
}

std::size_t BinaryMask::count_true() const {
  return std::accumulate(data_.begin(), data_.end(), std::size_t{0},
                         [](std::size_t acc, std::uint8_t v) {
                           return acc + (v != 0);
                         });
}

} // namespace uncage
