// uncage: cage-occlusion synthesis, detection, removal, and pose-metric
// evaluation from the command line. Subcommands: synth, gabor, segment,
// inpaint, pipeline, evaluate.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uncage/errors.hpp"
#include "uncage/fusion.hpp"
#include "uncage/gabor.hpp"
#include "uncage/imaging.hpp"
#include "uncage/inpaint.hpp"
#include "uncage/keypoints.hpp"
#include "uncage/metrics.hpp"
#include "uncage/png_io.hpp"
#include "uncage/synth.hpp"
#include "uncage/version.hpp"

#include "json_config.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uncage;

namespace {

class Timer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

// Re-throws the current stage's failure with a stage tag, preserving the
// exception type so exit codes stay faithful.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    throw IoError("stage " + name + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError("stage " + name + ": " + e.what());
  } catch (const UndefinedMetricError& e) {
    throw UndefinedMetricError("stage " + name + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + name + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct GaborOpts {
  double sigma_x = 1.8, sigma_y = 2.4, lambda = 4.0, phi = 0.0;
  int orientations = 72;
  int kernel_radius = 0; // 0 = ceil(3 * max(sigma_x, sigma_y))
  double t_low = 0.1, t_high = 0.2;
  bool no_rescale = false;

  GaborParams params() const {
    GaborParams p;
    p.sigma_x = sigma_x;
    p.sigma_y = sigma_y;
    p.lambda = lambda;
    p.phi = phi;
    p.n_orientations = orientations;
    p.kernel_radius =
        kernel_radius > 0 ? kernel_radius : auto_kernel_radius(sigma_x, sigma_y);
    return p;
  }

  json config() const {
    return {{"sigma-x", sigma_x},       {"sigma-y", sigma_y},
            {"lambda", lambda},         {"phi", phi},
            {"orientations", orientations}, {"kernel-radius", kernel_radius},
            {"t-low", t_low},           {"t-high", t_high},
            {"no-rescale", no_rescale}};
  }
};

void add_gabor_flags(CLI::App* app, GaborOpts& o) {
  app->add_option("--sigma-x", o.sigma_x, "Gabor envelope std-dev across the stripe")
      ->capture_default_str();
  app->add_option("--sigma-y", o.sigma_y, "Gabor envelope std-dev along the stripe")
      ->capture_default_str();
  app->add_option("--lambda", o.lambda, "Carrier wavelength in pixels")
      ->capture_default_str();
  app->add_option("--phi", o.phi, "Carrier phase offset in radians")
      ->capture_default_str();
  app->add_option("--orientations", o.orientations,
                  "Orientation bins over [0, 180)")
      ->capture_default_str();
  app->add_option("--kernel-radius", o.kernel_radius,
                  "Kernel radius in pixels; 0 derives it from the sigmas")
      ->capture_default_str();
  app->add_option("--t-low", o.t_low, "Confidence ramp start")
      ->capture_default_str();
  app->add_option("--t-high", o.t_high, "Confidence ramp end")
      ->capture_default_str();
  app->add_flag("--no-rescale", o.no_rescale,
                "Skip per-image max-rescaling of the variance map");
}

// Orientation-confidence map of one image: bank responses -> dispersion
// around the best orientation -> (optional per-image max rescale) ->
// linear ramp between t_low and t_high.
ProbabilityMap confidence_of(const ScalarMap& gray, const GaborOpts& o,
                             GaborBankResult* result_out = nullptr) {
  GaborBankResult result = bank_response(gray, o.params());
  const ScalarMap& variance =
      o.no_rescale ? result.variance : (result.variance = rescale_by_max(result.variance));
  ProbabilityMap conf = gabor_confidence(variance, o.t_low, o.t_high);
  if (result_out) *result_out = std::move(result);
  return conf;
}

struct PbaseOpts {
  bool logits = false;
  double logit_range = 30.0;

  json config() const {
    return {{"logits", logits}, {"logit-range", logit_range}};
  }
};

void add_pbase_flags(CLI::App* app, PbaseOpts& o) {
  app->add_flag("--logits", o.logits,
                "Treat the probability file as logits mapped over "
                "[-logit-range, logit-range] and apply the logistic function");
  app->add_option("--logit-range", o.logit_range,
                  "Half-width of the logit mapping range")
      ->capture_default_str();
}

ProbabilityMap load_pbase(const std::string& path, const PbaseOpts& o) {
  ProbabilityMap prob = load_probability_png(path);
  if (!o.logits) return prob;
  if (!(o.logit_range > 0.0))
    throw std::invalid_argument("logit-range must be positive");
  ScalarMap logits(prob.width(), prob.height());
  for (std::size_t i = 0; i < logits.data().size(); ++i)
    logits.data()[i] = prob.data()[i] * 2.0 * o.logit_range - o.logit_range;
  return sigmoid(logits);
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  std::string animals, cages, out;
  SynthConfig config;

  json config_json() const {
    const SynthConfig& c = config;
    return {{"animals", animals},
            {"cages", cages},
            {"out", out},
            {"seed", c.rng_seed},
            {"copies", c.post_aug_copies},
            {"target-w", c.target_w},
            {"target-h", c.target_h},
            {"zoom-min", c.zoom_lo},
            {"zoom-max", c.zoom_hi},
            {"brightness-min", c.brightness_lo},
            {"brightness-max", c.brightness_hi},
            {"contrast-min", c.contrast_lo},
            {"contrast-max", c.contrast_hi},
            {"saturation-min", c.saturation_lo},
            {"saturation-max", c.saturation_hi},
            {"post-brightness-min", c.post_brightness_lo},
            {"post-brightness-max", c.post_brightness_hi},
            {"post-contrast-min", c.post_contrast_lo},
            {"post-contrast-max", c.post_contrast_hi},
            {"post-saturation-min", c.post_saturation_lo},
            {"post-saturation-max", c.post_saturation_hi},
            {"alpha-gain", c.alpha_gain}};
  }
};

void setup_synth(CLI::App* app, SynthOpts& o) {
  app->add_option("--animals", o.animals, "Directory of RGB animal PNGs")
      ->required();
  app->add_option("--cages", o.cages, "Directory of RGBA cage PNGs")
      ->required();
  app->add_option("--out", o.out, "Output dataset directory")->required();
  SynthConfig& c = o.config;
  app->add_option("--seed", c.rng_seed, "Dataset RNG seed")
      ->capture_default_str();
  app->add_option("--copies", c.post_aug_copies,
                  "Photometric post-augmentation copies per composite")
      ->capture_default_str();
  app->add_option("--target-w", c.target_w, "Composite width")
      ->capture_default_str();
  app->add_option("--target-h", c.target_h, "Composite height")
      ->capture_default_str();
  app->add_option("--zoom-min", c.zoom_lo, "Cage zoom range low")
      ->capture_default_str();
  app->add_option("--zoom-max", c.zoom_hi, "Cage zoom range high")
      ->capture_default_str();
  app->add_option("--brightness-min", c.brightness_lo,
                  "Cage brightness shift low (8-bit units)")
      ->capture_default_str();
  app->add_option("--brightness-max", c.brightness_hi,
                  "Cage brightness shift high (8-bit units)")
      ->capture_default_str();
  app->add_option("--contrast-min", c.contrast_lo, "Cage contrast factor low")
      ->capture_default_str();
  app->add_option("--contrast-max", c.contrast_hi, "Cage contrast factor high")
      ->capture_default_str();
  app->add_option("--saturation-min", c.saturation_lo,
                  "Cage saturation factor low")
      ->capture_default_str();
  app->add_option("--saturation-max", c.saturation_hi,
                  "Cage saturation factor high")
      ->capture_default_str();
  app->add_option("--post-brightness-min", c.post_brightness_lo,
                  "Composite brightness shift low (8-bit units)")
      ->capture_default_str();
  app->add_option("--post-brightness-max", c.post_brightness_hi,
                  "Composite brightness shift high (8-bit units)")
      ->capture_default_str();
  app->add_option("--post-contrast-min", c.post_contrast_lo,
                  "Composite contrast factor low")
      ->capture_default_str();
  app->add_option("--post-contrast-max", c.post_contrast_hi,
                  "Composite contrast factor high")
      ->capture_default_str();
  app->add_option("--post-saturation-min", c.post_saturation_lo,
                  "Composite saturation factor low")
      ->capture_default_str();
  app->add_option("--post-saturation-max", c.post_saturation_hi,
                  "Composite saturation factor high")
      ->capture_default_str();
  app->add_option("--alpha-gain", c.alpha_gain,
                  "Global opacity gain applied to cage alpha")
      ->capture_default_str();
}

void run_synth(const SynthOpts& o) {
  Timer timer;
  const SynthManifest manifest =
      generate_dataset(o.animals, o.cages, o.config, o.out);

  std::vector<std::string> inputs, outputs;
  for (const SynthSample& s : manifest.samples) {
    if (inputs.empty() || inputs.back() != s.animal) inputs.push_back(s.animal);
    outputs.push_back((fs::path(o.out) / s.image).string());
    outputs.push_back((fs::path(o.out) / s.mask).string());
    if (!s.keypoints.empty())
      outputs.push_back((fs::path(o.out) / s.keypoints).string());
  }
  std::sort(inputs.begin(), inputs.end());
  inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
  for (const SynthSample& s : manifest.samples)
    if (std::find(inputs.begin(), inputs.end(), s.cage) == inputs.end())
      inputs.push_back(s.cage);
  outputs.push_back((fs::path(o.out) / "manifest.json").string());

  cli::write_run_manifest((fs::path(o.out) / "run.json").string(), "synth",
                          o.config_json(), inputs, outputs, timer.seconds());
  std::cout << "synth: wrote " << manifest.samples.size() << " samples to "
            << o.out << "\n";
}

// ---------------------------------------------------------------------------
// gabor

struct GaborCmdOpts {
  std::string image, out_dir;
  GaborOpts gabor;
  double gate = 0.1;
  bool dump_responses = false;

  json config_json() const {
    json j = gabor.config();
    j["image"] = image;
    j["out-dir"] = out_dir;
    j["gate"] = gate;
    j["dump-responses"] = dump_responses;
    return j;
  }
};

void setup_gabor(CLI::App* app, GaborCmdOpts& o) {
  app->add_option("--image", o.image, "Input image (PNG)")->required();
  app->add_option("--out-dir", o.out_dir, "Output directory")->required();
  add_gabor_flags(app, o.gabor);
  app->add_option("--gate", o.gate,
                  "Confidence gate for the orientation sin/cos channels")
      ->capture_default_str();
  app->add_flag("--dump-responses", o.dump_responses,
                "Also write every per-orientation response map");
}

ProbabilityMap unit_from_scalar(const ScalarMap& map, double lo, double hi) {
  ScalarMap out(map.width(), map.height());
  const double span = hi - lo;
  for (std::size_t i = 0; i < out.data().size(); ++i)
    out.data()[i] = (map.data()[i] - lo) / span;
  return ProbabilityMap::from_raw(out);
}

void run_gabor(const GaborCmdOpts& o) {
  Timer timer;
  const RasterImage img = load_image_png(o.image);
  GaborBankResult result;
  const ProbabilityMap conf = confidence_of(to_luma(img), o.gabor, &result);

  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + o.out_dir);

  std::vector<std::string> outputs;
  auto emit = [&](const std::string& name, const ProbabilityMap& map) {
    const std::string path = (fs::path(o.out_dir) / name).string();
    save_probability_png(path, map);
    outputs.push_back(path);
  };
  emit("confidence.png", conf);
  emit("theta.png",
       unit_from_scalar(result.theta_best, 0.0, std::numbers::pi));
  emit("variance.png", unit_from_scalar(rescale_by_max(result.variance), 0.0, 1.0));
  const auto [sin_map, cos_map] = orientation_channels(result, conf, o.gate);
  emit("orient_sin.png", unit_from_scalar(sin_map, -1.0, 1.0));
  emit("orient_cos.png", unit_from_scalar(cos_map, -1.0, 1.0));

  if (o.dump_responses) {
    fs::create_directories(fs::path(o.out_dir) / "responses", ec);
    if (ec) throw IoError("cannot create response dump directory");
    double max_resp = 0.0;
    for (const ScalarMap& r : result.responses)
      for (double v : r.data()) max_resp = std::max(max_resp, v);
    if (!(max_resp > 0.0)) max_resp = 1.0;
    for (std::size_t k = 0; k < result.responses.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof(name), "responses/response_%03zu.png", k);
      emit(name, unit_from_scalar(result.responses[k], 0.0, max_resp));
    }
  }

  cli::write_run_manifest((fs::path(o.out_dir) / "run.json").string(), "gabor",
                          o.config_json(), {o.image}, outputs, timer.seconds());
}

// ---------------------------------------------------------------------------
// segment

struct SegmentOpts {
  std::string image, pbase, out_mask;
  GaborOpts gabor;
  PbaseOpts pb;
  double boost = 0.4;
  double threshold = 0.3;
  int dilate_kernel = 0; // 0 = no dilation
  int dilate_iters = 1;

  json config_json() const {
    json j = gabor.config();
    j.update(pb.config());
    j["image"] = image;
    j["pbase"] = pbase;
    j["out-mask"] = out_mask;
    j["boost"] = boost;
    j["threshold"] = threshold;
    j["dilate"] = dilate_kernel;
    j["iters"] = dilate_iters;
    return j;
  }
};

void setup_segment(CLI::App* app, SegmentOpts& o) {
  app->add_option("--image", o.image, "Input image (PNG)")->required();
  app->add_option("--pbase", o.pbase,
                  "Base probability map (16-bit PNG; see --logits)")
      ->required();
  app->add_option("--out-mask", o.out_mask, "Output binary mask (PNG)")
      ->required();
  add_gabor_flags(app, o.gabor);
  add_pbase_flags(app, o.pb);
  app->add_option("--boost", o.boost, "Confidence boost added to pbase")
      ->capture_default_str();
  app->add_option("--threshold", o.threshold, "Mask threshold on the boosted map")
      ->capture_default_str();
  app->add_option("--dilate", o.dilate_kernel,
                  "Dilation kernel size (odd); 0 disables dilation")
      ->capture_default_str();
  app->add_option("--iters", o.dilate_iters, "Dilation iterations")
      ->capture_default_str();
}

BinaryMask segment_mask(const RasterImage& img, const ProbabilityMap& pbase,
                        const SegmentOpts& o, ProbabilityMap* conf_out = nullptr,
                        ProbabilityMap* enhanced_out = nullptr) {
  if (pbase.width() != img.width() || pbase.height() != img.height())
    throw std::invalid_argument("probability map dimensions do not match image");
  const ProbabilityMap conf = confidence_of(to_luma(img), o.gabor);
  const ProbabilityMap enhanced = fuse_probability(pbase, conf, o.boost);
  BinaryMask mask = threshold_mask(enhanced, o.threshold);
  if (o.dilate_kernel > 0)
    mask = dilate(mask, o.dilate_kernel, o.dilate_iters);
  if (conf_out) *conf_out = conf;
  if (enhanced_out) *enhanced_out = enhanced;
  return mask;
}

void run_segment(const SegmentOpts& o) {
  Timer timer;
  const RasterImage img = load_image_png(o.image);
  const ProbabilityMap pbase = load_pbase(o.pbase, o.pb);
  const BinaryMask mask = segment_mask(img, pbase, o);
  save_mask_png(o.out_mask, mask);
  cli::write_run_manifest(o.out_mask + ".run.json", "segment", o.config_json(),
                          {o.image, o.pbase}, {o.out_mask}, timer.seconds());
}

// ---------------------------------------------------------------------------
// inpaint

struct InpaintOpts {
  std::string image, mask, out;
  InpaintParams params;

  json config_json() const {
    return {{"image", image},
            {"mask", mask},
            {"out", out},
            {"patch", params.patch_size},
            {"iters", params.iterations_per_level},
            {"seed", params.rng_seed},
            {"levels", params.pyramid_levels},
            {"decay", params.search_decay}};
  }
};

void setup_inpaint(CLI::App* app, InpaintOpts& o) {
  app->add_option("--image", o.image, "Input image (PNG)")->required();
  app->add_option("--mask", o.mask, "Binary mask of pixels to fill (PNG)")
      ->required();
  app->add_option("--out", o.out, "Output image (PNG)")->required();
  app->add_option("--patch", o.params.patch_size, "Patch size (odd)")
      ->capture_default_str();
  app->add_option("--iters", o.params.iterations_per_level,
                  "Search iterations per pyramid level")
      ->capture_default_str();
  app->add_option("--seed", o.params.rng_seed, "RNG seed")
      ->capture_default_str();
  app->add_option("--levels", o.params.pyramid_levels,
                  "Pyramid level cap; 0 derives it from the image size")
      ->capture_default_str();
  app->add_option("--decay", o.params.search_decay,
                  "Random-search radius decay factor")
      ->capture_default_str();
}

void run_inpaint(const InpaintOpts& o) {
  Timer timer;
  const RasterImage img = load_image_png(o.image);
  const BinaryMask mask = load_mask_png(o.mask);
  const RasterImage filled = inpaint(img, mask, o.params);
  save_image_png(o.out, filled);
  cli::write_run_manifest(o.out + ".run.json", "inpaint", o.config_json(),
                          {o.image, o.mask}, {o.out}, timer.seconds());
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineOpts {
  std::string image, pbase, out_dir;
  GaborOpts gabor;
  PbaseOpts pb;
  double boost = 0.4;
  double threshold = 0.3;
  int dilate_kernel = 0;
  int dilate_iters = 1;
  InpaintParams inpaint_params;
  bool debug = false;
  int jobs = 1;

  json config_json() const {
    json j = gabor.config();
    j.update(pb.config());
    j["image"] = image;
    j["pbase"] = pbase;
    j["out-dir"] = out_dir;
    j["boost"] = boost;
    j["threshold"] = threshold;
    j["dilate"] = dilate_kernel;
    j["dilate-iters"] = dilate_iters;
    j["patch"] = inpaint_params.patch_size;
    j["inpaint-iters"] = inpaint_params.iterations_per_level;
    j["seed"] = inpaint_params.rng_seed;
    j["levels"] = inpaint_params.pyramid_levels;
    j["decay"] = inpaint_params.search_decay;
    j["debug"] = debug;
    j["jobs"] = jobs;
    return j;
  }

  SegmentOpts as_segment(const std::string& img_path,
                         const std::string& pb_path) const {
    SegmentOpts s;
    s.image = img_path;
    s.pbase = pb_path;
    s.gabor = gabor;
    s.pb = pb;
    s.boost = boost;
    s.threshold = threshold;
    s.dilate_kernel = dilate_kernel;
    s.dilate_iters = dilate_iters;
    return s;
  }
};

void setup_pipeline(CLI::App* app, PipelineOpts& o) {
  app->add_option("--image", o.image, "Input image (PNG) or directory of PNGs")
      ->required();
  app->add_option("--pbase", o.pbase,
                  "Base probability map (PNG) or directory matching --image "
                  "stems")
      ->required();
  app->add_option("--out-dir", o.out_dir, "Output directory")->required();
  add_gabor_flags(app, o.gabor);
  add_pbase_flags(app, o.pb);
  app->add_option("--boost", o.boost, "Confidence boost added to pbase")
      ->capture_default_str();
  app->add_option("--threshold", o.threshold, "Mask threshold on the boosted map")
      ->capture_default_str();
  app->add_option("--dilate", o.dilate_kernel,
                  "Dilation kernel size (odd); 0 disables dilation")
      ->capture_default_str();
  app->add_option("--dilate-iters", o.dilate_iters, "Dilation iterations")
      ->capture_default_str();
  app->add_option("--patch", o.inpaint_params.patch_size, "Inpaint patch size")
      ->capture_default_str();
  app->add_option("--inpaint-iters", o.inpaint_params.iterations_per_level,
                  "Inpaint iterations per pyramid level")
      ->capture_default_str();
  app->add_option("--seed", o.inpaint_params.rng_seed, "Inpaint RNG seed")
      ->capture_default_str();
  app->add_option("--levels", o.inpaint_params.pyramid_levels,
                  "Inpaint pyramid level cap; 0 = automatic")
      ->capture_default_str();
  app->add_option("--decay", o.inpaint_params.search_decay,
                  "Inpaint random-search radius decay")
      ->capture_default_str();
  app->add_flag("--debug", o.debug, "Dump stage intermediates");
  app->add_option("--jobs", o.jobs, "Images processed in parallel")
      ->capture_default_str();
}

struct PipelineItem {
  std::string image, pbase, out_dir;
};

void run_pipeline_item(const PipelineOpts& o, const PipelineItem& item) {
  Timer timer;
  std::vector<std::string> written;
  auto track = [&](const std::string& path) {
    written.push_back(path);
    return path;
  };
  try {
    std::error_code ec;
    fs::create_directories(item.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + item.out_dir);

    const RasterImage img =
        stage("load", [&] { return load_image_png(item.image); });
    const ProbabilityMap pbase = stage("load", [&] {
      ProbabilityMap p = load_pbase(item.pbase, o.pb);
      if (p.width() != img.width() || p.height() != img.height())
        throw std::invalid_argument(
            "probability map dimensions do not match image");
      return p;
    });

    const SegmentOpts seg = o.as_segment(item.image, item.pbase);
    ProbabilityMap conf, enhanced;
    const BinaryMask mask = stage(
        "segment", [&] { return segment_mask(img, pbase, seg, &conf, &enhanced); });
    save_mask_png(track((fs::path(item.out_dir) / "mask.png").string()), mask);
    if (o.debug) {
      save_probability_png(
          track((fs::path(item.out_dir) / "confidence.png").string()), conf);
      save_probability_png(
          track((fs::path(item.out_dir) / "enhanced.png").string()), enhanced);
    }

    const RasterImage filled = stage(
        "inpaint", [&] { return inpaint(img, mask, o.inpaint_params); });
    save_image_png(track((fs::path(item.out_dir) / "uncaged.png").string()),
                   filled);

    json config = o.config_json();
    config["image"] = item.image;
    config["pbase"] = item.pbase;
    config["out-dir"] = item.out_dir;
    const std::vector<std::string> outputs = written;
    cli::write_run_manifest(
        track((fs::path(item.out_dir) / "run.json").string()), "pipeline",
        config, {item.image, item.pbase}, outputs, timer.seconds());
  } catch (...) {
    // Never leave half a result behind.
    for (const std::string& path : written) {
      std::error_code ec;
      fs::remove(path, ec);
    }
    throw;
  }
}

void run_pipeline(const PipelineOpts& o) {
  std::vector<PipelineItem> items;
  if (fs::is_directory(o.image)) {
    if (!fs::is_directory(o.pbase))
      throw std::invalid_argument(
          "--pbase must be a directory when --image is a directory");
    std::vector<fs::path> images;
    for (const fs::directory_entry& e : fs::directory_iterator(o.image))
      if (e.is_regular_file() && e.path().extension() == ".png")
        images.push_back(e.path());
    std::sort(images.begin(), images.end());
    if (images.empty())
      throw std::invalid_argument("no .png images in " + o.image);
    for (const fs::path& img : images) {
      const fs::path pb = fs::path(o.pbase) / img.filename();
      if (!fs::is_regular_file(pb))
        throw IoError("missing probability map for " + img.string() + ": " +
                      pb.string());
      items.push_back({img.string(), pb.string(),
                       (fs::path(o.out_dir) / img.stem()).string()});
    }
  } else {
    items.push_back({o.image, o.pbase, o.out_dir});
  }

  const int jobs = std::max(1, o.jobs);
  if (jobs == 1 || items.size() == 1) {
    for (const PipelineItem& item : items) run_pipeline_item(o, item);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(items.size());
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < items.size();
           i = next.fetch_add(1)) {
        try {
          run_pipeline_item(o, items[i]);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();

  for (std::size_t i = 0; i < items.size(); ++i)
    if (failures[i]) {
      for (std::size_t j = i + 1; j < items.size(); ++j)
        if (failures[j]) {
          try {
            std::rethrow_exception(failures[j]);
          } catch (const std::exception& e) {
            std::cerr << "uncage: " << items[j].image << ": " << e.what()
                      << "\n";
          }
        }
      std::rethrow_exception(failures[i]);
    }
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string pred, gt;
  std::string out_csv = "metrics.csv";
  std::string out_json;
  MetricConfig config;
  std::string nme_normalizer = "diagonal";

  MetricConfig metric_config() const {
    MetricConfig c = config;
    c.nme_normalizer = nme_normalizer == "max-side"
                           ? NmeNormalizer::bbox_max_side
                           : NmeNormalizer::bbox_diagonal;
    return c;
  }

  json config_json() const {
    return {{"pred", pred},
            {"gt", gt},
            {"out-csv", out_csv},
            {"out-json", out_json},
            {"pck", config.pck_thresholds},
            {"auc-low", config.auc_low},
            {"auc-high", config.auc_high},
            {"auc-samples", config.auc_samples},
            {"oks-sigma", config.oks_sigmas},
            {"map-thresholds", config.map_oks_thresholds},
            {"nme-normalizer", nme_normalizer}};
  }
};

void setup_evaluate(CLI::App* app, EvaluateOpts& o) {
  app->add_option("--pred", o.pred, "Predicted keypoints (JSON)")->required();
  app->add_option("--gt", o.gt, "Ground-truth keypoints (JSON)")->required();
  app->add_option("--out-csv", o.out_csv, "Metric table CSV path")
      ->capture_default_str();
  app->add_option("--out-json", o.out_json,
                  "Optional metric table JSON path");
  app->add_option("--pck", o.config.pck_thresholds,
                  "PCK thresholds (fractions of the bbox max side)")
      ->capture_default_str();
  app->add_option("--auc-low", o.config.auc_low, "AUC range low")
      ->capture_default_str();
  app->add_option("--auc-high", o.config.auc_high, "AUC range high")
      ->capture_default_str();
  app->add_option("--auc-samples", o.config.auc_samples, "AUC sample count")
      ->capture_default_str();
  app->add_option("--oks-sigma", o.config.oks_sigmas,
                  "OKS tolerance constants (one value or one per keypoint)")
      ->capture_default_str();
  app->add_option("--map-thresholds", o.config.map_oks_thresholds,
                  "OKS thresholds for mAP")
      ->capture_default_str();
  app->add_option("--nme-normalizer", o.nme_normalizer,
                  "NME normalizer: diagonal or max-side")
      ->check(CLI::IsMember({"diagonal", "max-side"}))
      ->capture_default_str();
}

std::vector<std::string> table_header(const MetricConfig& c) {
  std::vector<std::string> cols = {"group", "frames", "matched",
                                   "med_px", "rmse_px", "nme_pct"};
  for (double t : c.pck_thresholds)
    cols.push_back("pck@" + format_double(t));
  cols.push_back("auc");
  cols.push_back("oks");
  cols.push_back("map_oks");
  return cols;
}

std::vector<std::string> table_row(const MetricRow& row) {
  std::vector<std::string> cells = {row.group, std::to_string(row.frames),
                                    std::to_string(row.matched_instances),
                                    format_double(row.med),
                                    format_double(row.rmse),
                                    format_double(row.nme)};
  for (double v : row.pck) cells.push_back(format_double(v));
  cells.push_back(format_double(row.auc));
  cells.push_back(format_double(row.oks));
  cells.push_back(format_double(row.map));
  return cells;
}

void run_evaluate(const EvaluateOpts& o) {
  Timer timer;
  const KeypointFile preds = load_keypoints(o.pred);
  const KeypointFile gts = load_keypoints(o.gt);
  const MetricConfig config = o.metric_config();
  const std::vector<MetricRow> rows = evaluate_dataset(preds, gts, config);

  const std::vector<std::string> header = table_header(config);
  std::vector<std::vector<std::string>> cells;
  for (const MetricRow& row : rows) cells.push_back(table_row(row));

  // Console table.
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  auto print_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c)
      std::cout << (c ? "  " : "") << row[c]
                << std::string(width[c] - row[c].size(), ' ');
    std::cout << "\n";
  };
  print_row(header);
  for (const auto& row : cells) print_row(row);

  std::vector<std::string> outputs;
  if (!o.out_csv.empty()) {
    std::ofstream csv(o.out_csv);
    if (!csv) throw IoError("cannot write " + o.out_csv);
    // Every defaulted convention is recorded up front so numbers are
    // interpretable without the invocation.
    csv << "# tool_version=" << kVersion << "\n";
    csv << "# nme-normalizer=" << o.nme_normalizer << "\n";
    csv << "# auc-low=" << format_double(config.auc_low) << "\n";
    csv << "# auc-high=" << format_double(config.auc_high) << "\n";
    csv << "# auc-samples=" << config.auc_samples << "\n";
    csv << "# oks-sigma=";
    for (std::size_t i = 0; i < config.oks_sigmas.size(); ++i)
      csv << (i ? "," : "") << format_double(config.oks_sigmas[i]);
    csv << "\n# map-thresholds=";
    for (std::size_t i = 0; i < config.map_oks_thresholds.size(); ++i)
      csv << (i ? "," : "") << format_double(config.map_oks_thresholds[i]);
    csv << "\n";
    for (std::size_t c = 0; c < header.size(); ++c)
      csv << (c ? "," : "") << header[c];
    csv << "\n";
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c)
        csv << (c ? "," : "") << row[c];
      csv << "\n";
    }
    if (!csv) throw IoError("write failure: " + o.out_csv);
    outputs.push_back(o.out_csv);
  }
  if (!o.out_json.empty()) {
    json root;
    root["config"] = o.config_json();
    root["rows"] = json::array();
    for (const MetricRow& row : rows) {
      json jr;
      jr["group"] = row.group;
      jr["frames"] = row.frames;
      jr["matched_instances"] = row.matched_instances;
      jr["med_px"] = row.med;
      jr["rmse_px"] = row.rmse;
      jr["nme_pct"] = row.nme;
      for (std::size_t t = 0; t < config.pck_thresholds.size(); ++t)
        jr["pck"][format_double(config.pck_thresholds[t])] = row.pck[t];
      jr["auc"] = row.auc;
      jr["oks"] = row.oks;
      jr["map_oks"] = row.map;
      root["rows"].push_back(std::move(jr));
    }
    std::ofstream out(o.out_json);
    if (!out) throw IoError("cannot write " + o.out_json);
    out << root.dump(2) << "\n";
    if (!out) throw IoError("write failure: " + o.out_json);
    outputs.push_back(o.out_json);
  }

  const std::string manifest_path =
      !o.out_csv.empty() ? o.out_csv + ".run.json" : "evaluate.run.json";
  cli::write_run_manifest(manifest_path, "evaluate", o.config_json(),
                          {o.pred, o.gt}, outputs, timer.seconds());
}

// ---------------------------------------------------------------------------

void configure_subcommand(CLI::App* sub) {
  // --config lives on the root app (CLI11 reads config files there only);
  // fallthrough routes `uncage <sub> --config FILE` to it.
  sub->fallthrough();
  sub->footer("Any option can also come from --config FILE, a flat JSON "
              "object keyed by long option names.\nExplicit flags override "
              "the file. Run manifests embed a reusable config object.");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cage-occlusion synthesis, detection, removal, and "
               "pose-metric evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<cli::JsonConfig>(&app));
  app.set_config("--config", "",
                 "JSON file supplying any subcommand option; explicit flags "
                 "override it");

  SynthOpts synth_opts;
  GaborCmdOpts gabor_opts;
  SegmentOpts segment_opts;
  InpaintOpts inpaint_opts;
  PipelineOpts pipeline_opts;
  EvaluateOpts evaluate_opts;

  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic caged dataset");
  setup_synth(synth_cmd, synth_opts);
  CLI::App* gabor_cmd = app.add_subcommand(
      "gabor", "Orientation analysis: confidence and orientation maps");
  setup_gabor(gabor_cmd, gabor_opts);
  CLI::App* segment_cmd = app.add_subcommand(
      "segment", "Fuse a probability map with orientation confidence into a "
                 "cage mask");
  setup_segment(segment_cmd, segment_opts);
  CLI::App* inpaint_cmd =
      app.add_subcommand("inpaint", "Fill masked pixels from image context");
  setup_inpaint(inpaint_cmd, inpaint_opts);
  CLI::App* pipeline_cmd = app.add_subcommand(
      "pipeline", "Segment then inpaint; accepts files or directories");
  setup_pipeline(pipeline_cmd, pipeline_opts);
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "Keypoint metric table from prediction and ground-truth "
                  "JSON");
  setup_evaluate(evaluate_cmd, evaluate_opts);

  for (CLI::App* sub : {synth_cmd, gabor_cmd, segment_cmd, inpaint_cmd,
                        pipeline_cmd, evaluate_cmd})
    configure_subcommand(sub);

  synth_cmd->callback([&] { run_synth(synth_opts); });
  gabor_cmd->callback([&] { run_gabor(gabor_opts); });
  segment_cmd->callback([&] { run_segment(segment_opts); });
  inpaint_cmd->callback([&] { run_inpaint(inpaint_opts); });
  pipeline_cmd->callback([&] { run_pipeline(pipeline_opts); });
  evaluate_cmd->callback([&] { run_evaluate(evaluate_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "uncage: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "uncage: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "uncage: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "uncage: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "uncage: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
