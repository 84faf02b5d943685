#include "uncage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "uncage/errors.hpp"
#include "uncage/hash.hpp"
#include "uncage/imaging.hpp"
#include "uncage/keypoints.hpp"
#include "uncage/png_io.hpp"
#include "uncage/version.hpp"

namespace uncage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kPairStreamTag = "synth-pair";
const char* const kPostStreamTag = "synth-post";

void check_range(double lo, double hi, const char* name) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
    throw std::invalid_argument(std::string(name) +
                                " range must be finite with low <= high");
}

std::vector<fs::path> list_pngs(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw IoError("not a directory: " + dir);
  std::vector<fs::path> out;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Half-pixel-center coordinate mapping of a resize, applied to keypoints
// so annotations stay on the same image feature.
double rescale_coord(double v, int src, int dst) {
  return (v + 0.5) * (static_cast<double>(dst) / src) - 0.5;
}

KeypointFile transform_keypoints(const KeypointFile& file, int src_w,
                                 int src_h, const SynthConfig& config,
                                 const BinaryMask& mask) {
  KeypointFile out = file;
  for (Frame& frame : out.frames)
    for (InstanceAnnotation& inst : frame.instances) {
      inst.bbox[0] = rescale_coord(inst.bbox[0], src_w, config.target_w);
      inst.bbox[1] = rescale_coord(inst.bbox[1], src_h, config.target_h);
      inst.bbox[2] *= static_cast<double>(config.target_w) / src_w;
      inst.bbox[3] *= static_cast<double>(config.target_h) / src_h;
      for (Keypoint& kp : inst.keypoints) {
        if (kp.visibility == 0) continue;
        kp.x = rescale_coord(kp.x, src_w, config.target_w);
        kp.y = rescale_coord(kp.y, src_h, config.target_h);
        if (kp.visibility != 2) continue;
        const int cx = static_cast<int>(std::lround(kp.x));
        const int cy = static_cast<int>(std::lround(kp.y));
        bool covered = false;
        for (int dy = -1; dy <= 1 && !covered; ++dy)
          for (int dx = -1; dx <= 1 && !covered; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (x < 0 || y < 0 || x >= mask.width() || y >= mask.height())
              continue;
            covered = mask.at(x, y);
          }
        if (covered) kp.visibility = 1;
      }
    }
  return out;
}

json range_json(double lo, double hi) { return json::array({lo, hi}); }

json config_json(const SynthConfig& c) {
  json j;
  j["target"] = {c.target_w, c.target_h};
  j["zoom_range"] = range_json(c.zoom_lo, c.zoom_hi);
  j["brightness_range"] = range_json(c.brightness_lo, c.brightness_hi);
  j["contrast_range"] = range_json(c.contrast_lo, c.contrast_hi);
  j["saturation_range"] = range_json(c.saturation_lo, c.saturation_hi);
  j["post_brightness_range"] =
      range_json(c.post_brightness_lo, c.post_brightness_hi);
  j["post_contrast_range"] = range_json(c.post_contrast_lo, c.post_contrast_hi);
  j["post_saturation_range"] =
      range_json(c.post_saturation_lo, c.post_saturation_hi);
  j["post_aug_copies"] = c.post_aug_copies;
  j["alpha_gain"] = c.alpha_gain;
  j["rng_seed"] = c.rng_seed;
  return j;
}

} // namespace

void SynthConfig::validate() const {
  if (target_w < 1 || target_h < 1)
    throw std::invalid_argument("target dimensions must be >= 1");
  check_range(zoom_lo, zoom_hi, "zoom");
  if (!(zoom_lo > 0.0))
    throw std::invalid_argument("zoom range must be positive");
  check_range(brightness_lo, brightness_hi, "brightness");
  check_range(contrast_lo, contrast_hi, "contrast");
  check_range(saturation_lo, saturation_hi, "saturation");
  check_range(post_brightness_lo, post_brightness_hi, "post brightness");
  check_range(post_contrast_lo, post_contrast_hi, "post contrast");
  check_range(post_saturation_lo, post_saturation_hi, "post saturation");
  if (post_aug_copies < 1)
    throw std::invalid_argument("post_aug_copies must be >= 1");
  if (!(alpha_gain > 0.0) || alpha_gain > 1.0)
    throw std::invalid_argument("alpha_gain must be in (0, 1]");
}

CageAugParams sample_cage_aug(const SynthConfig& config, Xorshift64Star& rng) {
  CageAugParams p;
  p.zoom = rng.uniform(config.zoom_lo, config.zoom_hi);
  p.brightness = rng.uniform(config.brightness_lo, config.brightness_hi);
  p.contrast = rng.uniform(config.contrast_lo, config.contrast_hi);
  p.saturation = rng.uniform(config.saturation_lo, config.saturation_hi);
  return p;
}

PostAugParams sample_post_aug(const SynthConfig& config, Xorshift64Star& rng) {
  PostAugParams p;
  p.brightness =
      rng.uniform(config.post_brightness_lo, config.post_brightness_hi);
  p.contrast = rng.uniform(config.post_contrast_lo, config.post_contrast_hi);
  p.saturation =
      rng.uniform(config.post_saturation_lo, config.post_saturation_hi);
  return p;
}

RasterImage zoom_crop_or_pad(const RasterImage& img, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw std::invalid_argument("zoom factor must be positive and finite");
  const int w = img.width(), h = img.height(), c = img.channels();
  const int cw = std::max<int>(1, static_cast<int>(std::lround(w / factor)));
  const int ch = std::max<int>(1, static_cast<int>(std::lround(h / factor)));
  if (cw == w && ch == h) return img;

  RasterImage canvas(cw, ch, c, 0.0);
  const int x0 = (w - cw) / 2, y0 = (h - ch) / 2;
  for (int y = 0; y < ch; ++y) {
    const int sy = y + y0;
    if (sy < 0 || sy >= h) continue;
    for (int x = 0; x < cw; ++x) {
      const int sx = x + x0;
      if (sx < 0 || sx >= w) continue;
      for (int ci = 0; ci < c; ++ci)
        canvas.at(x, y, ci) = img.at(sx, sy, ci);
    }
  }
  return resize_bilinear(canvas, w, h);
}

ComposeResult compose_with(const RasterImage& animal, const RasterImage& cage,
                           const SynthConfig& config,
                           const CageAugParams& params) {
  config.validate();
  if (animal.channels() != 3)
    throw std::invalid_argument("animal image must be RGB");
  if (cage.channels() != 4)
    throw std::invalid_argument("cage image has no alpha channel");

  const RasterImage animal_t =
      resize_bilinear(animal, config.target_w, config.target_h);
  RasterImage cage_t = resize_bilinear(cage, config.target_w, config.target_h);
  cage_t = zoom_crop_or_pad(cage_t, params.zoom);
  cage_t = adjust_photometric(cage_t, params.brightness, params.contrast,
                              params.saturation);

  ComposeResult result;
  result.params = params;
  result.image = RasterImage(config.target_w, config.target_h, 3);
  result.mask = BinaryMask(config.target_w, config.target_h);
  for (int y = 0; y < config.target_h; ++y)
    for (int x = 0; x < config.target_w; ++x) {
      const double alpha = cage_t.at(x, y, 3);
      const double a_eff = alpha * config.alpha_gain;
      for (int ci = 0; ci < 3; ++ci)
        result.image.at(x, y, ci) = a_eff * cage_t.at(x, y, ci) +
                                    (1.0 - a_eff) * animal_t.at(x, y, ci);
      result.mask.set(x, y, alpha > 0.0);
    }
  return result;
}

ComposeResult compose(const RasterImage& animal, const RasterImage& cage,
                      const SynthConfig& config, Xorshift64Star& rng) {
  return compose_with(animal, cage, config, sample_cage_aug(config, rng));
}

std::string split_for(const std::string& animal_stem) {
  return fnv1a64(animal_stem) % 100 < 20 ? "val" : "train";
}

SynthManifest generate_dataset(const std::string& animal_dir,
                               const std::string& cage_dir,
                               const SynthConfig& config,
                               const std::string& out_dir) {
  config.validate();
  const std::vector<fs::path> animals = list_pngs(animal_dir);
  const std::vector<fs::path> cages = list_pngs(cage_dir);
  if (animals.empty())
    throw std::invalid_argument("no .png animals in " + animal_dir);
  if (cages.empty())
    throw std::invalid_argument("no .png cages in " + cage_dir);

  std::error_code ec;
  for (const char* sub : {"", "images", "masks"}) {
    fs::create_directories(fs::path(out_dir) / sub, ec);
    if (ec)
      throw IoError("cannot create output directory " +
                    (fs::path(out_dir) / sub).string() + ": " + ec.message());
  }

  SynthManifest manifest;
  manifest.tool_version = kVersion;
  manifest.config = config;

  struct AnimalEntry {
    fs::path path;
    RasterImage image;
    KeypointFile keypoints;
    bool has_keypoints = false;
  };
  std::vector<AnimalEntry> loaded_animals;
  for (const fs::path& p : animals) {
    AnimalEntry entry;
    entry.path = p;
    entry.image = load_image_png(p.string());
    if (entry.image.channels() != 3)
      throw std::invalid_argument("animal image must be RGB: " + p.string());
    fs::path sidecar = p;
    sidecar.replace_extension(".json");
    if (fs::is_regular_file(sidecar)) {
      entry.keypoints = load_keypoints(sidecar.string());
      entry.has_keypoints = true;
    }
    loaded_animals.push_back(std::move(entry));
  }
  std::vector<RasterImage> loaded_cages;
  for (const fs::path& p : cages) {
    RasterImage img = load_image_png(p.string());
    if (img.channels() != 4)
      throw std::invalid_argument("cage image has no alpha channel: " +
                                  p.string());
    loaded_cages.push_back(std::move(img));
  }

  const int copies = config.post_aug_copies;
  for (std::size_t ai = 0; ai < loaded_animals.size(); ++ai) {
    const AnimalEntry& animal = loaded_animals[ai];
    const std::string animal_stem = animal.path.stem().string();
    const std::string split = split_for(animal_stem);
    for (std::size_t ci = 0; ci < loaded_cages.size(); ++ci) {
      const std::uint64_t pair_index = ai * loaded_cages.size() + ci;
      const std::uint64_t pair_seed =
          derive_stream_seed(config.rng_seed, kPairStreamTag, pair_index);
      Xorshift64Star pair_rng(pair_seed);
      const ComposeResult base =
          compose(animal.image, loaded_cages[ci], config, pair_rng);

      KeypointFile tagged;
      if (animal.has_keypoints) {
        fs::create_directories(fs::path(out_dir) / "keypoints", ec);
        if (ec)
          throw IoError("cannot create output directory " +
                        (fs::path(out_dir) / "keypoints").string());
        tagged = transform_keypoints(animal.keypoints, animal.image.width(),
                                     animal.image.height(), config, base.mask);
      }

      const std::string pair_name =
          animal_stem + "__" + cages[ci].stem().string();
      for (int k = 0; k < copies; ++k) {
        const std::uint64_t sample_index =
            pair_index * static_cast<std::uint64_t>(copies) +
            static_cast<std::uint64_t>(k);
        const std::uint64_t post_seed =
            derive_stream_seed(config.rng_seed, kPostStreamTag, sample_index);
        Xorshift64Star post_rng(post_seed);
        const PostAugParams post = sample_post_aug(config, post_rng);
        const RasterImage final_image = adjust_photometric(
            base.image, post.brightness, post.contrast, post.saturation);

        SynthSample sample;
        sample.index = static_cast<int>(sample_index);
        sample.animal = animal.path.string();
        sample.cage = cages[ci].string();
        const std::string name = pair_name + "__" + std::to_string(k);
        sample.image = "images/" + name + ".png";
        sample.mask = "masks/" + name + ".png";
        sample.split = split;
        sample.pair_seed = pair_seed;
        sample.post_seed = post_seed;
        sample.pair_params = base.params;
        sample.post_params = post;

        save_image_png((fs::path(out_dir) / sample.image).string(), final_image);
        save_mask_png((fs::path(out_dir) / sample.mask).string(), base.mask);
        if (animal.has_keypoints) {
          sample.keypoints = "keypoints/" + name + ".json";
          save_keypoints(tagged, (fs::path(out_dir) / sample.keypoints).string());
        }
        manifest.samples.push_back(std::move(sample));
      }
    }
  }

  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

void save_manifest(const SynthManifest& manifest, const std::string& path) {
  json root;
  root["tool_version"] = manifest.tool_version;
  root["config"] = config_json(manifest.config);
  root["samples"] = json::array();
  for (const SynthSample& s : manifest.samples) {
    json j;
    j["index"] = s.index;
    j["animal"] = s.animal;
    j["cage"] = s.cage;
    j["image"] = s.image;
    j["mask"] = s.mask;
    if (s.keypoints.empty())
      j["keypoints"] = nullptr;
    else
      j["keypoints"] = s.keypoints;
    j["split"] = s.split;
    j["pair_seed"] = hex64(s.pair_seed);
    j["post_seed"] = hex64(s.post_seed);
    j["zoom"] = s.pair_params.zoom;
    j["cage_brightness"] = s.pair_params.brightness;
    j["cage_contrast"] = s.pair_params.contrast;
    j["cage_saturation"] = s.pair_params.saturation;
    j["post_brightness"] = s.post_params.brightness;
    j["post_contrast"] = s.post_params.contrast;
    j["post_saturation"] = s.post_params.saturation;
    root["samples"].push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw IoError("write failure: " + path);
}

} // namespace uncage
