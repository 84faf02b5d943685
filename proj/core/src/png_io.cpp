#include "uncage/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "uncage/errors.hpp"

namespace uncage {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded 8- or 16-bit interleaved buffer, channel count 1/3/4.
struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples; // 8-bit values stored as-is
};

DecodedPng decode_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open PNG for reading: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng info struct allocation failed");
  }

  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
  DecodedPng out;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG: " + path);
  }

  png_init_io(png, file.get());
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  bit_depth = png_get_bit_depth(png, info);
  int channels = png_get_channels(png, info);
  std::size_t rowbytes = png_get_rowbytes(png, info);

  raw.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = channels;
  out.bit_depth = bit_depth;
  std::size_t n = static_cast<std::size_t>(w) * h * channels;
  out.samples.resize(n);
  if (bit_depth == 16) {
    // PNG is big-endian on the wire.
    for (std::size_t i = 0; i < n; ++i)
      out.samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) |
                                                  raw[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = raw[i];
  }
  return out;
}

void encode_png(const std::string& path, int width, int height, int channels,
                int bit_depth, const std::vector<std::uint16_t>& samples) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open PNG for writing: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng info struct allocation failed");
  }

  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG: " + path);
  }

  int color_type = PNG_COLOR_TYPE_GRAY;
  if (channels == 3) color_type = PNG_COLOR_TYPE_RGB;
  if (channels == 4) color_type = PNG_COLOR_TYPE_RGB_ALPHA;

  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::size_t n = static_cast<std::size_t>(width) * height * channels;
  std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
  raw.resize(n * bytes_per_sample);
  if (bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw[2 * i] = static_cast<png_byte>(samples[i] >> 8);
      raw[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xFF);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      raw[i] = static_cast<png_byte>(samples[i]);
  }

  std::size_t rowbytes = static_cast<std::size_t>(width) * channels *
                         bytes_per_sample;
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint16_t quantize(double v, double scale) {
  double q = std::round(std::min(1.0, std::max(0.0, v)) * scale);
  return static_cast<std::uint16_t>(q);
}

} // namespace

RasterImage load_image_png(const std::string& path) {
  DecodedPng d = decode_png(path);
  const double scale = d.bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<double> data(d.samples.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = d.samples[i] / scale;
  return RasterImage(d.width, d.height, d.channels, std::move(data));
}

void save_image_png(const std::string& path, const RasterImage& img) {
  std::vector<std::uint16_t> samples(img.data().size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = quantize(img.data()[i], 255.0);
  encode_png(path, img.width(), img.height(), img.channels(), 8, samples);
}

ProbabilityMap load_probability_png(const std::string& path) {
  DecodedPng d = decode_png(path);
  if (d.channels != 1)
    throw IoError("probability map PNG must be single-channel: " + path);
  const double scale = d.bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<double> data(d.samples.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = d.samples[i] / scale;
  return ProbabilityMap::from_raw(ScalarMap(d.width, d.height, std::move(data)));
}

void save_probability_png(const std::string& path, const ProbabilityMap& map) {
  std::vector<std::uint16_t> samples(map.data().size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = quantize(map.data()[i], 65535.0);
  encode_png(path, map.width(), map.height(), 1, 16, samples);
}

BinaryMask load_mask_png(const std::string& path) {
  DecodedPng d = decode_png(path);
  if (d.channels != 1)
    throw IoError("mask PNG must be single-channel: " + path);
  const std::uint16_t half = d.bit_depth == 16 ? 32768 : 128;
  std::vector<std::uint8_t> data(d.samples.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = d.samples[i] >= half ? 1 : 0;
  return BinaryMask(d.width, d.height, std::move(data));
}

void save_mask_png(const std::string& path, const BinaryMask& mask) {
  std::vector<std::uint16_t> samples(mask.data().size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = mask.data()[i] ? 255 : 0;
  encode_png(path, mask.width(), mask.height(), 1, 8, samples);
}

} // namespace uncage
