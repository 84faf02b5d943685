#include "uncage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "uncage/errors.hpp"

namespace uncage {

namespace {

void check_pair(const InstanceAnnotation& pred, const InstanceAnnotation& gt) {
  if (pred.keypoints.size() != gt.keypoints.size())
    throw std::invalid_argument("keypoint count mismatch between instances");
}

// Squared distances and support (gt visibility > 0). Shared by all
// instance-level metrics so the support rule lives in one place.
std::vector<double> annotated_sq_distances(const InstanceAnnotation& pred,
                                           const InstanceAnnotation& gt) {
  check_pair(pred, gt);
  std::vector<double> d2;
  for (std::size_t i = 0; i < gt.keypoints.size(); ++i) {
    if (gt.keypoints[i].visibility <= 0) continue;
    const double dx = pred.keypoints[i].x - gt.keypoints[i].x;
    const double dy = pred.keypoints[i].y - gt.keypoints[i].y;
    d2.push_back(dx * dx + dy * dy);
  }
  if (d2.empty())
    throw UndefinedMetricError(
        "ground truth annotates no keypoints (all visibility 0)");
  return d2;
}

double sigma_for(const MetricConfig& config, std::size_t i,
                 std::size_t n_keypoints) {
  if (config.oks_sigmas.size() == 1) return config.oks_sigmas[0];
  if (config.oks_sigmas.size() != n_keypoints)
    throw std::invalid_argument(
        "oks_sigmas must have one entry or one per keypoint");
  return config.oks_sigmas[i];
}

bool gt_annotated(const InstanceAnnotation& gt) {
  for (const Keypoint& kp : gt.keypoints)
    if (kp.visibility > 0) return true;
  return false;
}

void check_ascending_positive(const std::vector<double>& v,
                              const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i]))
      throw std::invalid_argument(std::string(name) +
                                  " entries must be positive and finite");
    if (i > 0 && v[i] <= v[i - 1])
      throw std::invalid_argument(std::string(name) +
                                  " must be sorted strictly ascending");
  }
}

// One ranked prediction for AP computation.
struct RankedPred {
  double score;
  double oks; // 0 when unmatched
  bool matched;
};

// All-point interpolated AP at one OKS threshold. Equal scores rank true
// positives first; summation runs in ascending rank order.
double average_precision(std::vector<RankedPred> preds, double tau,
                         std::size_t n_gt) {
  if (n_gt == 0)
    throw UndefinedMetricError("no annotated ground-truth instances");
  std::stable_sort(preds.begin(), preds.end(),
                   [tau](const RankedPred& a, const RankedPred& b) {
                     const bool tp_a = a.matched && a.oks >= tau;
                     const bool tp_b = b.matched && b.oks >= tau;
                     if (a.score != b.score) return a.score > b.score;
                     return tp_a && !tp_b;
                   });
  std::vector<double> recall, precision;
  std::size_t tp = 0, fp = 0;
  for (const RankedPred& p : preds) {
    if (p.matched && p.oks >= tau) {
      ++tp;
      recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
      precision.push_back(static_cast<double>(tp) /
                          static_cast<double>(tp + fp));
    } else {
      ++fp;
    }
  }
  if (recall.empty()) return 0.0;
  // Interpolate: precision at each recall point becomes the max precision
  // at any equal-or-higher recall.
  for (std::size_t i = precision.size() - 1; i-- > 0;)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

struct DatasetStats {
  std::vector<RankedPred> ranked;
  std::size_t n_gt = 0;
};

// Matches every pred frame against the gt frame of the same id and pools
// the ranked predictions; gt instances count toward recall whether or not
// a pred frame exists.
DatasetStats pool_matches(const KeypointFile& preds, const KeypointFile& gts,
                          const MetricConfig& config) {
  std::map<std::string, const Frame*> gt_by_id;
  for (const Frame& f : gts.frames) gt_by_id[f.frame_id] = &f;

  DatasetStats stats;
  for (const Frame& f : gts.frames)
    for (const InstanceAnnotation& gt : f.instances)
      if (gt_annotated(gt)) ++stats.n_gt;

  static const std::vector<InstanceAnnotation> kNoInstances;
  for (const Frame& pf : preds.frames) {
    const auto it = gt_by_id.find(pf.frame_id);
    const std::vector<InstanceAnnotation>& gt_instances =
        it != gt_by_id.end() ? it->second->instances : kNoInstances;
    const MatchResult match =
        greedy_oks_match(pf.instances, gt_instances, config);
    for (std::size_t i = 0; i < pf.instances.size(); ++i)
      stats.ranked.push_back({pf.instances[i].score, match.oks_value[i],
                              match.gt_index[i] >= 0});
  }
  return stats;
}

double map_from_stats(const DatasetStats& stats, const MetricConfig& config) {
  double sum = 0.0;
  for (const double tau : config.map_oks_thresholds)
    sum += average_precision(stats.ranked, tau, stats.n_gt);
  return sum / static_cast<double>(config.map_oks_thresholds.size());
}

} // namespace

std::vector<double> MetricConfig::default_map_thresholds() {
  std::vector<double> taus;
  for (int k = 0; k <= 9; ++k) taus.push_back((50 + 5 * k) / 100.0);
  return taus;
}

void MetricConfig::validate() const {
  check_ascending_positive(pck_thresholds, "pck_thresholds");
  check_ascending_positive(map_oks_thresholds, "map_oks_thresholds");
  if (!(auc_high > auc_low) || auc_low < 0.0)
    throw std::invalid_argument("auc range must satisfy 0 <= low < high");
  if (auc_samples < 2)
    throw std::invalid_argument("auc_samples must be >= 2");
  if (oks_sigmas.empty())
    throw std::invalid_argument("oks_sigmas must not be empty");
  for (double s : oks_sigmas)
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("oks_sigmas must be positive and finite");
}

double med(const InstanceAnnotation& pred, const InstanceAnnotation& gt) {
  const std::vector<double> d2 = annotated_sq_distances(pred, gt);
  double sum = 0.0;
  for (double v : d2) sum += std::sqrt(v);
  return sum / static_cast<double>(d2.size());
}

double rmse(const InstanceAnnotation& pred, const InstanceAnnotation& gt) {
  const std::vector<double> d2 = annotated_sq_distances(pred, gt);
  double sum = 0.0;
  for (double v : d2) sum += v;
  return std::sqrt(sum / static_cast<double>(d2.size()));
}

double nme(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           const MetricConfig& config) {
  const double w = gt.bbox[2], h = gt.bbox[3];
  if (!(w > 0.0) || !(h > 0.0))
    throw std::invalid_argument("degenerate bbox (w and h must be > 0)");
  const double normalizer = config.nme_normalizer == NmeNormalizer::bbox_diagonal
                                ? std::sqrt(w * w + h * h)
                                : std::max(w, h);
  return 100.0 * med(pred, gt) / normalizer;
}

double pck(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("pck threshold must be >= 0 and finite");
  const std::vector<double> d2 = annotated_sq_distances(pred, gt);
  const double limit = t * std::max(gt.bbox[2], gt.bbox[3]);
  std::size_t hits = 0;
  for (double v : d2)
    if (std::sqrt(v) <= limit) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(d2.size());
}

double auc(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           const MetricConfig& config) {
  config.validate();
  const int n = config.auc_samples;
  const double step = (config.auc_high - config.auc_low) / (n - 1);
  double integral = 0.0;
  double prev = pck(pred, gt, config.auc_low);
  for (int i = 1; i < n; ++i) {
    const double cur = pck(pred, gt, config.auc_low + i * step);
    integral += 0.5 * (prev + cur) * step;
    prev = cur;
  }
  return integral / (config.auc_high - config.auc_low);
}

double oks(const InstanceAnnotation& pred, const InstanceAnnotation& gt,
           const MetricConfig& config) {
  check_pair(pred, gt);
  const double s2 = gt.bbox[2] * gt.bbox[3];
  if (!(s2 > 0.0))
    throw std::invalid_argument("degenerate bbox (w and h must be > 0)");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.keypoints.size(); ++i) {
    if (gt.keypoints[i].visibility <= 0) continue;
    const double dx = pred.keypoints[i].x - gt.keypoints[i].x;
    const double dy = pred.keypoints[i].y - gt.keypoints[i].y;
    const double k = sigma_for(config, i, gt.keypoints.size());
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * s2 * k * k));
    ++count;
  }
  if (count == 0)
    throw UndefinedMetricError(
        "ground truth annotates no keypoints (all visibility 0)");
  return sum / static_cast<double>(count);
}

MatchResult greedy_oks_match(const std::vector<InstanceAnnotation>& preds,
                             const std::vector<InstanceAnnotation>& gts,
                             const MetricConfig& config) {
  MatchResult result;
  result.gt_index.assign(preds.size(), -1);
  result.oks_value.assign(preds.size(), 0.0);

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!gt_annotated(gts[g])) continue;
      pairs.emplace_back(oks(preds[p], gts[g], config), p, g);
    }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });

  std::vector<std::uint8_t> gt_taken(gts.size(), 0);
  for (const auto& [value, p, g] : pairs) {
    if (result.gt_index[p] >= 0 || gt_taken[g]) continue;
    result.gt_index[p] = static_cast<int>(g);
    result.oks_value[p] = value;
    gt_taken[g] = 1;
  }
  return result;
}

double map_oks(const KeypointFile& preds, const KeypointFile& gts,
               const MetricConfig& config) {
  config.validate();
  const DatasetStats stats = pool_matches(preds, gts, config);
  if (stats.n_gt == 0)
    throw UndefinedMetricError("no annotated ground-truth instances");
  return map_from_stats(stats, config);
}

double bce_with_logits(const ScalarMap& logits, const BinaryMask& target) {
  if (logits.width() != target.width() || logits.height() != target.height())
    throw std::invalid_argument("logit map and target dimensions mismatch");
  const std::vector<double>& x = logits.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = target.data()[i] ? 1.0 : 0.0;
    sum += std::max(x[i], 0.0) - x[i] * y + std::log1p(std::exp(-std::fabs(x[i])));
  }
  return sum / static_cast<double>(x.size());
}

std::vector<MetricRow> evaluate_dataset(const KeypointFile& preds,
                                        const KeypointFile& gts,
                                        const MetricConfig& config) {
  config.validate();

  // The keypoint layout must agree across the whole dataset.
  std::size_t n_keypoints = 0;
  bool have_count = false;
  auto check_layout = [&](const Frame& frame, const char* which) {
    for (const InstanceAnnotation& inst : frame.instances) {
      if (!have_count) {
        n_keypoints = inst.keypoints.size();
        have_count = true;
      } else if (inst.keypoints.size() != n_keypoints) {
        throw SchemaError(std::string(which) + " frame '" + frame.frame_id +
                          "' instance '" + inst.instance_id + "' has " +
                          std::to_string(inst.keypoints.size()) +
                          " keypoints, expected " +
                          std::to_string(n_keypoints));
      }
    }
  };
  for (const Frame& f : gts.frames) check_layout(f, "ground-truth");
  for (const Frame& f : preds.frames) check_layout(f, "prediction");

  std::map<std::string, const Frame*> pred_by_id;
  for (const Frame& f : preds.frames) pred_by_id[f.frame_id] = &f;

  struct GroupAccum {
    std::size_t frames = 0;
    std::size_t pairs = 0;
    double med_sum = 0.0, rmse_sum = 0.0, nme_sum = 0.0;
    std::vector<double> pck_sum;
    double auc_sum = 0.0, oks_sum = 0.0;
    KeypointFile pred_subset, gt_subset;
  };
  std::map<std::string, GroupAccum> groups;
  GroupAccum all;
  all.pck_sum.assign(config.pck_thresholds.size(), 0.0);

  static const Frame kEmptyFrame;
  auto accumulate = [&](GroupAccum& acc, const Frame& gt_frame,
                        const Frame& pred_frame) {
    ++acc.frames;
    acc.gt_subset.frames.push_back(gt_frame);
    acc.pred_subset.frames.push_back(pred_frame);
    const MatchResult match =
        greedy_oks_match(pred_frame.instances, gt_frame.instances, config);
    for (std::size_t p = 0; p < pred_frame.instances.size(); ++p) {
      if (match.gt_index[p] < 0) continue;
      const InstanceAnnotation& pred = pred_frame.instances[p];
      const InstanceAnnotation& gt =
          gt_frame.instances[static_cast<std::size_t>(match.gt_index[p])];
      ++acc.pairs;
      acc.med_sum += med(pred, gt);
      acc.rmse_sum += rmse(pred, gt);
      acc.nme_sum += nme(pred, gt, config);
      for (std::size_t t = 0; t < config.pck_thresholds.size(); ++t)
        acc.pck_sum[t] += pck(pred, gt, config.pck_thresholds[t]);
      acc.auc_sum += auc(pred, gt, config);
      acc.oks_sum += match.oks_value[p];
    }
  };

  for (const Frame& gt_frame : gts.frames) {
    const auto it = pred_by_id.find(gt_frame.frame_id);
    const Frame& pred_frame = it != pred_by_id.end() ? *it->second : kEmptyFrame;
    accumulate(all, gt_frame, pred_frame);
    if (!gt_frame.group.empty()) {
      GroupAccum& acc = groups[gt_frame.group];
      if (acc.pck_sum.empty())
        acc.pck_sum.assign(config.pck_thresholds.size(), 0.0);
      accumulate(acc, gt_frame, pred_frame);
    }
  }

  auto finish = [&](const std::string& name, GroupAccum& acc,
                    const KeypointFile& map_preds,
                    const KeypointFile& map_gts) {
    MetricRow row;
    row.group = name;
    row.frames = acc.frames;
    row.matched_instances = acc.pairs;
    row.pck.assign(config.pck_thresholds.size(), 0.0);
    if (acc.pairs > 0) {
      const double n = static_cast<double>(acc.pairs);
      row.med = acc.med_sum / n;
      row.rmse = acc.rmse_sum / n;
      row.nme = acc.nme_sum / n;
      for (std::size_t t = 0; t < row.pck.size(); ++t)
        row.pck[t] = acc.pck_sum[t] / n;
      row.auc = acc.auc_sum / n;
      row.oks = acc.oks_sum / n;
    }
    row.map = map_oks(map_preds, map_gts, config);
    return row;
  };

  std::vector<MetricRow> rows;
  for (auto& [name, acc] : groups)
    rows.push_back(finish(name, acc, acc.pred_subset, acc.gt_subset));
  // The dataset row ranks every prediction, including frames absent from
  // the ground truth (they count as false positives).
  rows.push_back(finish("all", all, preds, gts));
  return rows;
}

} // namespace uncage
