#pragma once

#include <cstdint>
#include <vector>

namespace uncage {

/// Interleaved multi-channel raster. Samples are doubles with nominal range
/// [0,1]; 8-bit file values map through /255 on load and *255+round on save.
/// Invariants: data.size() == w*h*c, all samples finite, w,h >= 1,
/// c in {1,3,4}.
class RasterImage {
public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, double fill = 0.0);
  RasterImage(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  double& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const RasterImage& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Single-channel field of unbounded finite reals (filter responses,
/// variance maps, logits). Same storage conventions as RasterImage.
class ScalarMap {
public:
  ScalarMap() = default;
  ScalarMap(int width, int height, double fill = 0.0);
  ScalarMap(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }

  double& at(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  double at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ScalarMap& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Per-pixel probability in [0,1]. Construction clamps, so the invariant
/// holds for every live instance.
class ProbabilityMap {
public:
  ProbabilityMap() = default;
  ProbabilityMap(int width, int height, double fill = 0.0);

  /// Clamps every sample of `raw` into [0,1]. Non-finite input is rejected.
  static ProbabilityMap from_raw(const ScalarMap& raw);

  int width() const { return width_; }
  int height() const { return height_; }

  double at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  const std::vector<double>& data() const { return data_; }

  ScalarMap as_scalar() const {
    return ScalarMap(width_, height_, data_);
  }

  bool same_shape(const ProbabilityMap& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Boolean mask, true (1) = cage / occluded pixel.
class BinaryMask {
public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);
  BinaryMask(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v) {
    data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }

  std::vector<std::uint8_t>& data() { return data_; }
  const std::vector<std::uint8_t>& data() const { return data_; }

  std::size_t count_true() const;

  bool same_shape(const BinaryMask& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool operator==(const BinaryMask& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           data_ == other.data_;
  }

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

} // namespace uncage
