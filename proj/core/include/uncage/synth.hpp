#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uncage/image.hpp"
#include "uncage/rng.hpp"

namespace uncage {

struct SynthConfig {
  int target_w = 512;
  int target_h = 288;
  double zoom_lo = 0.8, zoom_hi = 1.2;
  double brightness_lo = -30.0, brightness_hi = 30.0; // 8-bit units
  double contrast_lo = 0.8, contrast_hi = 1.3;
  double saturation_lo = 0.7, saturation_hi = 1.4;
  // Photometric ranges for the whole-composite pass; the mask is already
  // fixed by then.
  double post_brightness_lo = -30.0, post_brightness_hi = 30.0;
  double post_contrast_lo = 0.8, post_contrast_hi = 1.3;
  double post_saturation_lo = 0.7, post_saturation_hi = 1.4;
  int post_aug_copies = 3;
  double alpha_gain = 1.0; // in (0, 1]
  std::uint64_t rng_seed = 7;

  void validate() const;
};

/// Cage-side augmentation draw; applied before blending, to color and
/// alpha alike (zoom) or color only (photometrics).
struct CageAugParams {
  double zoom = 1.0;
  double brightness = 0.0; // 8-bit units
  double contrast = 1.0;
  double saturation = 1.0;
};

struct PostAugParams {
  double brightness = 0.0; // 8-bit units
  double contrast = 1.0;
  double saturation = 1.0;
};

/// Draws zoom, brightness, contrast, saturation — in that order — from the
/// configured ranges. Exactly four RNG draws regardless of range width.
CageAugParams sample_cage_aug(const SynthConfig& config, Xorshift64Star& rng);

/// Three draws: brightness, contrast, saturation.
PostAugParams sample_post_aug(const SynthConfig& config, Xorshift64Star& rng);

/// Center crop (factor > 1) or zero-pad (factor < 1) to dims/factor, then
/// resize back to the input dims. Factor 1 is an exact copy. All channels
/// transform identically, so RGBA content and alpha stay aligned.
RasterImage zoom_crop_or_pad(const RasterImage& img, double factor);

struct ComposeResult {
  RasterImage image; // RGB at target dims
  BinaryMask mask;   // augmented cage alpha > 0
  CageAugParams params;
};

/// Alpha-blends an augmented cage over an animal:
///   out = a_eff * cage_rgb + (1 - a_eff) * animal_rgb,
///   a_eff = cage_alpha * alpha_gain.
/// Both inputs are resized to the target dims first; the cage then gets
/// the supplied zoom + photometric augmentation. The animal must be RGB
/// and the cage RGBA.
ComposeResult compose_with(const RasterImage& animal, const RasterImage& cage,
                           const SynthConfig& config,
                           const CageAugParams& params);

/// compose_with using parameters drawn from `rng`.
ComposeResult compose(const RasterImage& animal, const RasterImage& cage,
                      const SynthConfig& config, Xorshift64Star& rng);

/// Deterministic 80/20 split keyed on the animal identity, so every
/// composite of one animal lands in the same split.
std::string split_for(const std::string& animal_stem);

struct SynthSample {
  int index = 0;
  std::string animal, cage;      // input paths as discovered
  std::string image, mask;       // output paths relative to out_dir
  std::string keypoints;         // relative path, empty when no sidecar
  std::string split;             // "train" or "val"
  std::uint64_t pair_seed = 0, post_seed = 0;
  CageAugParams pair_params;
  PostAugParams post_params;
};

struct SynthManifest {
  std::string tool_version;
  SynthConfig config;
  std::vector<SynthSample> samples;
};

/// Composites every animal against every cage, post_aug_copies times each,
/// into out_dir/{images,masks}/ plus manifest.json. A keypoint sidecar
/// <animal_stem>.json next to an animal is rescaled to the target dims,
/// re-tagged occluded where the cage mask covers it (1-px tolerance), and
/// written under out_dir/keypoints/. Deterministic per (inputs, seed).
SynthManifest generate_dataset(const std::string& animal_dir,
                               const std::string& cage_dir,
                               const SynthConfig& config,
                               const std::string& out_dir);

void save_manifest(const SynthManifest& manifest, const std::string& path);

} // namespace uncage
