#pragma once

#include <string>

#include "uncage/image.hpp"

namespace uncage {

// PNG interchange conventions:
//   images            8-bit gray / RGB / RGBA, sample = round(v * 255)
//   probability maps  16-bit single channel, probability = sample / 65535
//   binary masks      8-bit single channel, {0, 255}
// Loads are lenient where that is safe (8-bit probability maps divide by
// 255, mask samples >= 128 read as true); saves always use the formats
// above. Failures raise IoError.

RasterImage load_image_png(const std::string& path);
void save_image_png(const std::string& path, const RasterImage& img);

ProbabilityMap load_probability_png(const std::string& path);
void save_probability_png(const std::string& path, const ProbabilityMap& map);

BinaryMask load_mask_png(const std::string& path);
void save_mask_png(const std::string& path, const BinaryMask& mask);

} // namespace uncage
