#include <doctest.h>

#include <fstream>

#include "uncage/errors.hpp"
#include "uncage/png_io.hpp"

#include "test_util.hpp"

using namespace uncage;

TEST_CASE("8-bit RGB round trip is exact on the 1/255 grid") {
  testutil::TempDir tmp("png");
  const RasterImage img = testutil::noise_rgb8(23, 17, 10);
  const std::string path = tmp.file("rgb.png");
  save_image_png(path, img);
  const RasterImage back = load_image_png(path);
  CHECK(back.width() == 23);
  CHECK(back.height() == 17);
  CHECK(back.channels() == 3);
  CHECK(back.data() == img.data());
}

TEST_CASE("RGBA round trip preserves alpha") {
  testutil::TempDir tmp("png");
  const RasterImage img = testutil::noise_rgb8(9, 9, 11, 4);
  const std::string path = tmp.file("rgba.png");
  save_image_png(path, img);
  const RasterImage back = load_image_png(path);
  CHECK(back.channels() == 4);
  CHECK(back.data() == img.data());
}

TEST_CASE("save_image_png rounds to the nearest 8-bit level") {
  testutil::TempDir tmp("png");
  RasterImage img(2, 1, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 100.4 / 255.0;
    img.at(1, 0, c) = 100.6 / 255.0;
  }
  const std::string path = tmp.file("round.png");
  save_image_png(path, img);
  const RasterImage back = load_image_png(path);
  CHECK(back.at(0, 0, 0) == 100.0 / 255.0);
  CHECK(back.at(1, 0, 0) == 101.0 / 255.0);
}

TEST_CASE("16-bit probability round trip is exact on the 1/65535 grid") {
  testutil::TempDir tmp("png");
  ScalarMap raw(257, 3);
  {
    Xorshift64Star rng(12);
    for (double& v : raw.data())
      v = static_cast<double>(rng.next_below(65536)) / 65535.0;
  }
  const ProbabilityMap prob = ProbabilityMap::from_raw(raw);
  const std::string path = tmp.file("prob.png");
  save_probability_png(path, prob);
  const ProbabilityMap back = load_probability_png(path);
  CHECK(back.data() == prob.data());
}

TEST_CASE("mask round trip and the half-scale threshold") {
  testutil::TempDir tmp("png");
  const BinaryMask mask = testutil::noise_mask(31, 12, 5);
  const std::string path = tmp.file("mask.png");
  save_mask_png(path, mask);
  CHECK(load_mask_png(path) == mask);

  // an 8-bit probability file thresholds at 128
  ScalarMap gray(2, 1);
  gray.at(0, 0) = 127.0 / 255.0;
  gray.at(1, 0) = 128.0 / 255.0;
  // write via probability path at 16 bit: 127/255 -> 32639 < 32768 -> false
  const std::string p16 = tmp.file("gray16.png");
  save_probability_png(p16, ProbabilityMap::from_raw(gray));
  const BinaryMask thresholded = load_mask_png(p16);
  CHECK_FALSE(thresholded.at(0, 0));
  CHECK(thresholded.at(1, 0));
}

TEST_CASE("probability and mask loaders reject multi-channel files") {
  testutil::TempDir tmp("png");
  const std::string path = tmp.file("rgb.png");
  save_image_png(path, testutil::noise_rgb8(4, 4, 2));
  CHECK_THROWS_AS(load_probability_png(path), IoError);
  CHECK_THROWS_AS(load_mask_png(path), IoError);
}

TEST_CASE("loaders raise IoError for missing or corrupt files") {
  testutil::TempDir tmp("png");
  CHECK_THROWS_AS(load_image_png(tmp.file("absent.png")), IoError);

  const std::string junk = tmp.file("junk.png");
  {
    std::ofstream out(junk, std::ios::binary);
    out << "this is not a png";
  }
  CHECK_THROWS_AS(load_image_png(junk), IoError);
}

TEST_CASE("out-of-range samples are clamped on save") {
  testutil::TempDir tmp("png");
  RasterImage img(1, 1, 3);
  img.data()[0] = 1.7;
  img.data()[1] = -0.3;
  img.data()[2] = 0.5;
  const std::string path = tmp.file("clamp.png");
  save_image_png(path, img);
  const RasterImage back = load_image_png(path);
  CHECK(back.at(0, 0, 0) == 1.0);
  CHECK(back.at(0, 0, 1) == 0.0);
}
