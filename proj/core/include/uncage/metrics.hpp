#pragma once

#include <string>
#include <vector>

#include "uncage/image.hpp"
#include "uncage/keypoints.hpp"

namespace uncage {

enum class NmeNormalizer { bbox_diagonal, bbox_max_side };

struct MetricConfig {
  std::vector<double> pck_thresholds = {0.05, 0.10};
  double auc_low = 0.0;
  double auc_high = 0.10;
  int auc_samples = 101;
  /// Per-keypoint tolerance constants; a single entry applies uniformly.
  std::vector<double> oks_sigmas = {0.05};
  std::vector<double> map_oks_thresholds = default_map_thresholds();
  NmeNormalizer nme_normalizer = NmeNormalizer::bbox_diagonal;

  static std::vector<double> default_map_thresholds(); // 0.50:0.05:0.95
  void validate() const;
};

/// Mean Euclidean distance in pixels over keypoints the ground truth
/// annotates (visibility > 0). No annotated keypoint -> UndefinedMetricError.
double med(const InstanceAnnotation& pred, const InstanceAnnotation& gt);

/// Root of the mean squared distance over the same support as med.
double rmse(const InstanceAnnotation& pred, const InstanceAnnotation& gt);

/// 100 * med / object size, where size is the gt bbox diagonal or max side
/// per config. Degenerate bbox -> std::invalid_argument.
double nme(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           const MetricConfig& config);

/// Percentage of annotated keypoints within t * max(bbox_w, bbox_h).
double pck(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           double t);

/// Trapezoidal mean of pck(t) over [auc_low, auc_high] at auc_samples
/// points; a perfect predictor scores 100.
double auc(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           const MetricConfig& config);

/// Object keypoint similarity in [0, 1]:
///   sum_i exp(-d_i^2 / (2 s^2 k_i^2)) over annotated keypoints, / count,
/// with s = sqrt(bbox_w * bbox_h) from the ground truth.
double oks(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           const MetricConfig& config);

/// Greedy one-to-one assignment by descending OKS (ties: lower pred index,
/// then lower gt index). Ground-truth instances without annotated keypoints
/// never match. Entries are parallel to preds; unmatched -> gt_index -1.
struct MatchResult {
  std::vector<int> gt_index;
  std::vector<double> oks_value; // 0 where unmatched
};
MatchResult greedy_oks_match(const std::vector<InstanceAnnotation>& preds,
                             const std::vector<InstanceAnnotation>& gts,
                             const MetricConfig& config);

/// Mean average precision over the OKS threshold grid. Predictions match
/// per frame_id via greedy_oks_match; a match counts as a true positive at
/// threshold tau iff its OKS >= tau. AP uses all-point interpolation of
/// the precision-recall curve ranked by score (equal scores rank true
/// positives first, so scoreless input degenerates to recall). A dataset
/// with no annotated ground truth -> UndefinedMetricError.
double map_oks(const KeypointFile& preds, const KeypointFile& gts,
               const MetricConfig& config);

/// Mean binary cross-entropy between logits and a {0,1} target, computed
/// as max(x,0) - x*y + log(1 + exp(-|x|)) to stay finite for any logit.
double bce_with_logits(const ScalarMap& logits, const BinaryMask& target);

/// One aggregated row of the evaluation table.
struct MetricRow {
  std::string group; // grouping key, or "all" for the dataset row
  std::size_t frames = 0;
  std::size_t matched_instances = 0;
  double med = 0.0;
  double rmse = 0.0;
  double nme = 0.0;
  std::vector<double> pck; // parallel to config.pck_thresholds
  double auc = 0.0;
  double oks = 0.0;
  double map = 0.0;
};

/// Full metric table: one row per distinct frame group plus an "all" row
/// (last). Instance-level metrics average over greedy-matched pairs; map
/// evaluates detection quality over each row's frames. Inconsistent
/// keypoint counts raise SchemaError naming the first offending instance.
std::vector<MetricRow> evaluate_dataset(const KeypointFile& preds,
                                        const KeypointFile& gts,
                                        const MetricConfig& config);

} // namespace uncage
