// Instance-level evaluation: merge-and-match IoU, miss/false-positive rates,
// area stratification, and parameter-overhead accounting.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchseg/mask.hpp"

namespace patchseg {

// Matching rule: a prediction matches a ground-truth instance when both
// share a pixel and a class; predictions overlapping several ground-truth
// instances go exclusively to the one with the largest overlap (ties to the
// lower ground-truth id). All predictions assigned to one ground-truth
// instance are merged before the IoU.
struct GtMatch {
  InstanceId gt_id = 0;
  ClassId class_id = 0;
  std::vector<InstanceId> matched_preds;
  std::int64_t gt_pixels = 0;
  std::int64_t merged_pixels = 0;        // union of the matched predictions
  std::int64_t intersection_pixels = 0;  // merged intersect ground truth
  double iou = 0;                        // 0 when no prediction matched
};

struct MatchResult {
  std::vector<GtMatch> gt;                       // ascending gt_id
  std::vector<InstanceId> unmatched_predictions; // ascending id
  std::map<InstanceId, ClassId> pred_classes;    // all predictions, for per-class rates
};

MatchResult match_and_merge(const InstanceMap& pred, const InstanceMap& gt);

struct ClassMetrics {
  std::int64_t gt_instances = 0;
  std::int64_t pred_instances = 0;
  std::int64_t matched_gt = 0;          // ground-truth instances with >= 1 prediction
  std::int64_t unmatched_predictions = 0;
  double mean_iou = 0;
  double median_iou = 0;
  double fnr_pct = 0;  // NaN under the n/a convention for empty classes
  double fpr_pct = 0;
};

struct ParamCounts {
  std::int64_t base = 0;
  std::int64_t projection = 0;
  std::int64_t decoder = 0;
};

// 100 * (projection + decoder) / base; base of zero throws DataError.
double overhead_percent(const ParamCounts& params);

struct AreaBucket {
  double lower_m2 = 0;  // inclusive
  double upper_m2 = 0;  // exclusive; infinity for the last bucket
  std::string label;
  std::int64_t gt_instances = 0;
  double mean_iou = 0;
};

// Fig-style breakdown: <100 m2, 100-500 m2, 500 m2-1 acre, 1-2 acre,
// 2-5 acre, >5 acre (1 acre = 4046.8564224 m2).
std::vector<AreaBucket> default_area_buckets();

// Buckets every ground-truth instance by pixel_count * gsd^2 square meters;
// lower edges inclusive, upper exclusive. gsd must be positive.
std::vector<AreaBucket> stratify_by_area(std::span<const GtMatch> matches, double gsd,
                                         std::vector<AreaBucket> buckets = default_area_buckets());

struct EvalConfig {
  // Report NaN instead of 100 for rates whose denominator class is empty on
  // both sides.
  bool empty_empty_na = false;
  double gsd = 0;  // ground sample distance in meters per pixel; 0 disables stratification
  std::optional<ParamCounts> params;
  std::optional<ClassMap> class_map;  // labels for reports; ids used verbatim when absent
};

struct EvalReport {
  std::map<ClassId, ClassMetrics> per_class;
  std::vector<AreaBucket> area_buckets;  // empty unless cfg.gsd > 0
  std::optional<double> overhead_pct;
  nlohmann::json to_json(const EvalConfig& cfg) const;
  std::string to_csv(const EvalConfig& cfg) const;
  std::string to_table(const EvalConfig& cfg) const;
};

// Single pair. Classes appearing in neither map are absent from the report
// unless cfg.class_map lists them (the empty-empty convention then applies).
EvalReport evaluate(const InstanceMap& pred, const InstanceMap& gt, const EvalConfig& cfg);

// Pools per-instance IoUs and counts across scene pairs.
EvalReport evaluate_many(std::span<const std::pair<const InstanceMap*, const InstanceMap*>> pairs,
                         const EvalConfig& cfg);

}  // namespace patchseg
