#include "patchseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "patchseg/errors.hpp"

namespace patchseg {

namespace {

using json = nlohmann::json;

constexpr double kAcreM2 = 4046.8564224;

ClassId class_of(const InstanceMap& map, InstanceId id, const char* side) {
  const auto it = map.classes.find(id);
  if (it == map.classes.end()) {
    throw DataError(std::string(side) + " instance " + std::to_string(id) +
                    " missing from its class table");
  }
  return it->second;
}

std::string format_rate(double v) {
  if (std::isnan(v)) return "na";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Pooled per-class accumulation across one or more scene pairs.
struct Pool {
  std::map<ClassId, std::vector<double>> ious;  // one entry per gt instance
  std::map<ClassId, std::int64_t> matched_gt;
  std::map<ClassId, std::int64_t> pred_count;
  std::map<ClassId, std::int64_t> unmatched_pred;
  std::vector<GtMatch> matches;  // all scenes, for stratification

  void add(const MatchResult& result) {
    for (const GtMatch& m : result.gt) {
      ious[m.class_id].push_back(m.iou);
      if (!m.matched_preds.empty()) ++matched_gt[m.class_id];
      matches.push_back(m);
    }
    for (const auto& [id, cls] : result.pred_classes) ++pred_count[cls];
    for (InstanceId id : result.unmatched_predictions) {
      ++unmatched_pred[result.pred_classes.at(id)];
    }
  }
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double sum = 0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

MatchResult match_and_merge(const InstanceMap& pred, const InstanceMap& gt) {
  if (pred.ids.height() != gt.ids.height() || pred.ids.width() != gt.ids.width()) {
    throw DataError("prediction and ground truth differ in shape");
  }

  std::map<InstanceId, std::int64_t> pred_size;
  std::map<InstanceId, std::int64_t> gt_size;
  std::map<InstanceId, std::map<InstanceId, std::int64_t>> overlap;  // pred -> gt -> pixels
  for (std::size_t i = 0; i < pred.ids.data().size(); ++i) {
    const InstanceId p = pred.ids.data()[i];
    const InstanceId g = gt.ids.data()[i];
    if (p != 0) {
      class_of(pred, p, "predicted");
      ++pred_size[p];
    }
    if (g != 0) {
      class_of(gt, g, "ground-truth");
      ++gt_size[g];
    }
    if (p != 0 && g != 0) ++overlap[p][g];
  }

  // Exclusive assignment: each prediction goes to its largest same-class
  // overlap, ties to the lower ground-truth id.
  std::map<InstanceId, std::vector<InstanceId>> assigned;  // gt -> preds
  MatchResult result;
  result.pred_classes = pred.classes;
  for (const auto& [p, cls] : pred.classes) {
    const auto overlaps = overlap.find(p);
    InstanceId best_gt = 0;
    std::int64_t best_pixels = 0;
    if (overlaps != overlap.end()) {
      for (const auto& [g, pixels] : overlaps->second) {
        if (class_of(gt, g, "ground-truth") != cls) continue;
        if (pixels > best_pixels) {  // map order makes ties pick the lower id
          best_pixels = pixels;
          best_gt = g;
        }
      }
    }
    if (best_gt == 0) {
      result.unmatched_predictions.push_back(p);
    } else {
      assigned[best_gt].push_back(p);
    }
  }

  for (const auto& [g, cls] : gt.classes) {
    GtMatch m;
    m.gt_id = g;
    m.class_id = cls;
    m.gt_pixels = gt_size.count(g) ? gt_size.at(g) : 0;
    const auto it = assigned.find(g);
    if (it != assigned.end()) {
      m.matched_preds = it->second;
      for (InstanceId p : m.matched_preds) {
        m.merged_pixels += pred_size.at(p);  // predictions are disjoint regions
        m.intersection_pixels += overlap.at(p).at(g);
      }
      const std::int64_t union_pixels = m.merged_pixels + m.gt_pixels - m.intersection_pixels;
      m.iou = static_cast<double>(m.intersection_pixels) / static_cast<double>(union_pixels);
    }
    result.gt.push_back(std::move(m));
  }
  return result;
}

double overhead_percent(const ParamCounts& params) {
  if (params.base <= 0) throw DataError("base parameter count must be positive");
  if (params.projection < 0 || params.decoder < 0) {
    throw DataError("parameter counts must be non-negative");
  }
  return 100.0 * static_cast<double>(params.projection + params.decoder) /
         static_cast<double>(params.base);
}

std::vector<AreaBucket> default_area_buckets() {
  const double inf = std::numeric_limits<double>::infinity();
  return {
      {0.0, 100.0, "<100 m2"},
      {100.0, 500.0, "100-500 m2"},
      {500.0, kAcreM2, "500 m2 - 1 acre"},
      {kAcreM2, 2 * kAcreM2, "1-2 acre"},
      {2 * kAcreM2, 5 * kAcreM2, "2-5 acre"},
      {5 * kAcreM2, inf, ">5 acre"},
  };
}

std::vector<AreaBucket> stratify_by_area(std::span<const GtMatch> matches, double gsd,
                                         std::vector<AreaBucket> buckets) {
  if (!(gsd > 0)) throw DataError("gsd must be positive");
  if (buckets.empty()) throw DataError("no area buckets");
  std::vector<double> iou_sum(buckets.size(), 0.0);
  for (const GtMatch& m : matches) {
    const double area_m2 = static_cast<double>(m.gt_pixels) * gsd * gsd;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      if (area_m2 >= buckets[b].lower_m2 && area_m2 < buckets[b].upper_m2) {
        ++buckets[b].gt_instances;
        iou_sum[b] += m.iou;
        break;
      }
    }
  }
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    buckets[b].mean_iou =
        buckets[b].gt_instances > 0 ? iou_sum[b] / static_cast<double>(buckets[b].gt_instances) : 0;
  }
  return buckets;
}

EvalReport evaluate(const InstanceMap& pred, const InstanceMap& gt, const EvalConfig& cfg) {
  const std::pair<const InstanceMap*, const InstanceMap*> pair{&pred, &gt};
  return evaluate_many({&pair, 1}, cfg);
}

EvalReport evaluate_many(std::span<const std::pair<const InstanceMap*, const InstanceMap*>> pairs,
                         const EvalConfig& cfg) {
  Pool pool;
  for (const auto& [pred, gt] : pairs) pool.add(match_and_merge(*pred, *gt));

  // Classes to report: everything observed, plus every non-background class
  // of the class map so never-present classes still get a row.
  std::vector<ClassId> classes;
  const auto note = [&classes](ClassId c) {
    if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
  };
  for (const auto& [c, v] : pool.ious) note(c);
  for (const auto& [c, v] : pool.pred_count) note(c);
  if (cfg.class_map) {
    for (const auto& e : cfg.class_map->entries()) {
      if (e.id != cfg.class_map->background_id()) note(e.id);
    }
  }
  std::sort(classes.begin(), classes.end());

  const double empty_rate = cfg.empty_empty_na ? std::numeric_limits<double>::quiet_NaN() : 100.0;

  EvalReport report;
  for (ClassId c : classes) {
    ClassMetrics m;
    const auto ious = pool.ious.find(c);
    m.gt_instances = ious == pool.ious.end() ? 0 : static_cast<std::int64_t>(ious->second.size());
    m.matched_gt = pool.matched_gt.count(c) ? pool.matched_gt.at(c) : 0;
    m.pred_instances = pool.pred_count.count(c) ? pool.pred_count.at(c) : 0;
    m.unmatched_predictions = pool.unmatched_pred.count(c) ? pool.unmatched_pred.at(c) : 0;
    m.mean_iou = ious == pool.ious.end() ? 0 : mean_of(ious->second);
    m.median_iou = ious == pool.ious.end() ? 0 : median_of(ious->second);

    const std::int64_t missed_gt = m.gt_instances - m.matched_gt;
    m.fnr_pct = m.gt_instances > 0
                    ? 100.0 * static_cast<double>(missed_gt) / static_cast<double>(m.gt_instances)
                    : empty_rate;
    if (m.pred_instances > 0) {
      m.fpr_pct = 100.0 * static_cast<double>(m.unmatched_predictions) /
                  static_cast<double>(m.pred_instances);
    } else {
      // No predictions at all: an all-missed class is fully wrong, an
      // empty-empty class follows the configured convention.
      m.fpr_pct = missed_gt > 0 ? 100.0 : empty_rate;
    }
    report.per_class[c] = m;
  }

  if (cfg.gsd > 0) report.area_buckets = stratify_by_area(pool.matches, cfg.gsd);
  if (cfg.params) report.overhead_pct = overhead_percent(*cfg.params);
  return report;
}

namespace {

std::string class_label(const EvalConfig& cfg, ClassId c) {
  if (cfg.class_map && cfg.class_map->has_id(c)) return cfg.class_map->label_of(c);
  return std::to_string(c);
}

}  // namespace

json EvalReport::to_json(const EvalConfig& cfg) const {
  json classes = json::object();
  for (const auto& [c, m] : per_class) {
    json entry{{"class_id", c},
               {"gt_instances", m.gt_instances},
               {"pred_instances", m.pred_instances},
               {"matched_gt", m.matched_gt},
               {"unmatched_predictions", m.unmatched_predictions},
               {"mean_iou", m.mean_iou},
               {"median_iou", m.median_iou}};
    // NaN is not representable in JSON; the n/a convention serializes null.
    entry["fnr_pct"] = std::isnan(m.fnr_pct) ? json() : json(m.fnr_pct);
    entry["fpr_pct"] = std::isnan(m.fpr_pct) ? json() : json(m.fpr_pct);
    classes[class_label(cfg, c)] = std::move(entry);
  }
  json out{{"classes", std::move(classes)},
           {"conventions",
            {{"matching", "exclusive max-overlap, ties to lower ground-truth id; matched "
                          "predictions merged per ground-truth instance"},
             {"unmatched_gt_iou", 0.0},
             {"empty_class_rates", cfg.empty_empty_na ? "na" : "100"}}}};
  if (!area_buckets.empty()) {
    json buckets = json::array();
    for (const AreaBucket& b : area_buckets) {
      buckets.push_back({{"label", b.label},
                         {"lower_m2", b.lower_m2},
                         {"upper_m2", std::isinf(b.upper_m2) ? json() : json(b.upper_m2)},
                         {"gt_instances", b.gt_instances},
                         {"mean_iou", b.mean_iou}});
    }
    out["area_buckets"] = std::move(buckets);
    out["gsd"] = cfg.gsd;
  }
  if (overhead_pct) out["overhead_pct"] = *overhead_pct;
  return out;
}

std::string EvalReport::to_csv(const EvalConfig& cfg) const {
  std::string out = "class,mean_iou,median_iou,fnr_pct,fpr_pct,gt_instances,pred_instances\n";
  char buf[160];
  for (const auto& [c, m] : per_class) {
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%s,%s,%lld,%lld\n",
                  class_label(cfg, c).c_str(), m.mean_iou, m.median_iou,
                  format_rate(m.fnr_pct).c_str(), format_rate(m.fpr_pct).c_str(),
                  static_cast<long long>(m.gt_instances), static_cast<long long>(m.pred_instances));
    out += buf;
  }
  return out;
}

std::string EvalReport::to_table(const EvalConfig& cfg) const {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-16s %9s %10s %8s %8s %6s %6s\n", "class", "mean IoU",
                "median IoU", "FNR%", "FPR%", "GT", "pred");
  out += buf;
  for (const auto& [c, m] : per_class) {
    std::snprintf(buf, sizeof(buf), "%-16s %9.4f %10.4f %8s %8s %6lld %6lld\n",
                  class_label(cfg, c).c_str(), m.mean_iou, m.median_iou,
                  format_rate(m.fnr_pct).c_str(), format_rate(m.fpr_pct).c_str(),
                  static_cast<long long>(m.gt_instances), static_cast<long long>(m.pred_instances));
    out += buf;
  }
  if (!area_buckets.empty()) {
    out += "\n";
    std::snprintf(buf, sizeof(buf), "%-16s %9s %6s\n", "area bucket", "mean IoU", "GT");
    out += buf;
    for (const AreaBucket& b : area_buckets) {
      std::snprintf(buf, sizeof(buf), "%-16s %9.4f %6lld\n", b.label.c_str(), b.mean_iou,
                    static_cast<long long>(b.gt_instances));
      out += buf;
    }
  }
  if (overhead_pct) {
    std::snprintf(buf, sizeof(buf), "\noverhead: %.2f%%\n", *overhead_pct);
    out += buf;
  }
  return out;
}

}  // namespace patchseg
