#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

using namespace patchseg;

namespace testsupport {

namespace {

bool blank_char(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string strip(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && blank_char(s[b])) ++b;
  while (e > b && blank_char(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Whole-string signed integer; false on junk, emptiness, or overflow.
bool parse_integer(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t i = 0;
  bool negative = false;
  if (s[0] == '-') {
    negative = true;
    i = 1;
    if (s.size() == 1) return false;
  }
  long long acc = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    const int digit = s[i] - '0';
    if (acc > (std::numeric_limits<long long>::max() - digit) / 10) return false;
    acc = acc * 10 + digit;
  }
  out = negative ? -acc : acc;
  return true;
}

// Linear scan instead of the library's hash lookup.
bool lookup_label(const ClassMap& cm, const std::string& label, ClassId& out) {
  for (const auto& entry : cm.entries()) {
    if (entry.label == label) {
      out = entry.id;
      return true;
    }
  }
  return false;
}

std::vector<std::string> split_keep_empty(const std::string& s, char sep) {
  std::vector<std::string> pieces;
  std::string current;
  for (char c : s) {
    if (c == sep) {
      pieces.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  pieces.push_back(current);
  return pieces;
}

}  // namespace

RefDecode reference_decode(const std::string& text, const ClassMap& cm, int height, int width) {
  RefDecode out{SemanticMask(height, width, cm.background_id()),
                Grid<std::uint8_t>(height, width, 0)};
  const long long total = static_cast<long long>(height) * width;
  long long p = 0;

  for (const std::string& line : split_keep_empty(text, '\n')) {
    if (strip(line).empty()) {
      p += width;
      continue;
    }
    for (const std::string& run : split_keep_empty(line, '|')) {
      std::size_t star = std::string::npos;
      for (std::size_t i = run.size(); i-- > 0;) {
        if (run[i] == '*') {
          star = i;
          break;
        }
      }
      long long count = 0;
      if (star == std::string::npos || !parse_integer(strip(run.substr(star + 1)), count) ||
          count <= 0) {
        ++out.invalid_runs;
        continue;
      }
      ClassId value = cm.background_id();
      if (!lookup_label(cm, strip(run.substr(0, star)), value)) {
        value = cm.background_id();
        ++out.unknown_labels;
      }
      if (p + count > total) {
        count = total - p;
        ++out.truncated_runs;
      }
      for (long long i = 0; i < count; ++i) {
        out.mask.data()[static_cast<std::size_t>(p + i)] = value;
        out.written.data()[static_cast<std::size_t>(p + i)] = 1;
      }
      p += count;
    }
  }

  if (p < total) out.underfilled_pixels = static_cast<int>(total - p);
  return out;
}

std::string reference_encode(const SemanticMask& mask, const ClassMap& cm) {
  std::string out;
  for (int r = 0; r < mask.height(); ++r) {
    std::string row;
    ClassId current = mask(r, 0);
    int count = 0;
    const auto flush = [&] {
      if (!row.empty()) row += '|';
      row += cm.label_of(current) + " *" + std::to_string(count);
    };
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c) == current) {
        ++count;
      } else {
        flush();
        current = mask(r, c);
        count = 1;
      }
    }
    flush();
    if (r > 0) out += '\n';
    out += row;
  }
  return out;
}

double reference_dice(const SemanticMask& pred, const SemanticMask& gt, const ClassMap& cm,
                      double epsilon, bool include_background) {
  double sum = 0;
  int participating = 0;
  for (const auto& entry : cm.entries()) {
    if (!include_background && entry.id == cm.background_id()) continue;
    ++participating;
    long long in_pred = 0;
    long long in_gt = 0;
    long long in_both = 0;
    for (int r = 0; r < pred.height(); ++r) {
      for (int c = 0; c < pred.width(); ++c) {
        const bool p = pred(r, c) == entry.id;
        const bool g = gt(r, c) == entry.id;
        if (p) ++in_pred;
        if (g) ++in_gt;
        if (p && g) ++in_both;
      }
    }
    sum += 2.0 * static_cast<double>(in_both) /
           (static_cast<double>(in_pred) + static_cast<double>(in_gt) + epsilon);
  }
  return sum / participating;
}

InstanceMap reference_components(const SemanticMask& mask, ClassId background) {
  InstanceMap out;
  out.ids = Grid<InstanceId>(mask.height(), mask.width(), 0);
  InstanceId next = 1;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c) == background || out.ids(r, c) != 0) continue;
      const ClassId cls = mask(r, c);
      const InstanceId id = next++;
      out.classes[id] = cls;
      std::deque<std::pair<int, int>> frontier{{r, c}};
      out.ids(r, c) = id;
      while (!frontier.empty()) {
        const auto [fr, fc] = frontier.front();
        frontier.pop_front();
        const std::pair<int, int> neighbors[4] = {
            {fr - 1, fc}, {fr + 1, fc}, {fr, fc - 1}, {fr, fc + 1}};
        for (const auto& [nr, nc] : neighbors) {
          if (mask.in_bounds(nr, nc) && out.ids(nr, nc) == 0 && mask(nr, nc) == cls) {
            out.ids(nr, nc) = id;
            frontier.push_back({nr, nc});
          }
        }
      }
    }
  }
  return out;
}

RefMatch reference_match(const InstanceMap& pred, const InstanceMap& gt) {
  const auto pixels_of = [](const InstanceMap& im, InstanceId id) {
    std::vector<std::size_t> px;
    for (std::size_t i = 0; i < im.ids.data().size(); ++i) {
      if (im.ids.data()[i] == id) px.push_back(i);
    }
    return px;
  };

  RefMatch out;
  std::map<InstanceId, std::vector<InstanceId>> assigned;  // gt -> preds

  for (const auto& [pred_id, pred_class] : pred.classes) {
    const std::vector<std::size_t> pred_px = pixels_of(pred, pred_id);
    InstanceId best_gt = 0;
    long long best_overlap = 0;
    for (const auto& [gt_id, gt_class] : gt.classes) {
      if (gt_class != pred_class) continue;
      long long overlap = 0;
      for (std::size_t i : pred_px) {
        if (gt.ids.data()[i] == gt_id) ++overlap;
      }
      // std::map iterates ascending, so strict > keeps the lower gt id on ties.
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_gt = gt_id;
      }
    }
    if (best_overlap > 0) {
      assigned[best_gt].push_back(pred_id);
    } else {
      out.unmatched_preds.push_back(pred_id);
    }
  }

  for (const auto& [gt_id, gt_class] : gt.classes) {
    RefGtOutcome outcome;
    outcome.gt_id = gt_id;
    outcome.class_id = gt_class;
    const auto it = assigned.find(gt_id);
    if (it != assigned.end()) outcome.preds = it->second;
    std::sort(outcome.preds.begin(), outcome.preds.end());

    long long gt_count = 0;
    long long merged = 0;
    long long inter = 0;
    const std::set<InstanceId> merged_ids(outcome.preds.begin(), outcome.preds.end());
    for (std::size_t i = 0; i < gt.ids.data().size(); ++i) {
      const bool in_gt = gt.ids.data()[i] == gt_id;
      const bool in_merged = merged_ids.count(pred.ids.data()[i]) != 0;
      if (in_gt) ++gt_count;
      if (in_merged) ++merged;
      if (in_gt && in_merged) ++inter;
    }
    const long long uni = gt_count + merged - inter;
    outcome.iou = uni > 0 && !outcome.preds.empty()
                      ? static_cast<double>(inter) / static_cast<double>(uni)
                      : 0.0;
    out.gt.push_back(outcome);
  }
  return out;
}

double reference_median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h) {
  std::vector<double> grad(x.size(), 0.0);
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

SemanticMask random_mask(Rng& rng, int height, int width, const ClassMap& cm) {
  SemanticMask mask(height, width);
  for (auto& v : mask.data()) {
    v = cm.entries()[uniform_below(rng, cm.entries().size())].id;
  }
  return mask;
}

InstanceMap random_instance_map(Rng& rng, int height, int width, int max_instances,
                                const ClassMap& cm) {
  std::vector<ClassId> foreground;
  for (const auto& entry : cm.entries()) {
    if (entry.id != cm.background_id()) foreground.push_back(entry.id);
  }
  InstanceMap out;
  out.ids = Grid<InstanceId>(height, width, 0);
  // Seed points then a few dilation sweeps give blotchy, overlapping-prone
  // regions; whatever ids survive get table entries.
  std::vector<ClassId> class_of(static_cast<std::size_t>(max_instances) + 1, 0);
  for (int id = 1; id <= max_instances; ++id) {
    class_of[static_cast<std::size_t>(id)] =
        foreground[uniform_below(rng, foreground.size())];
    out.ids(uniform_int(rng, 0, height - 1), uniform_int(rng, 0, width - 1)) =
        static_cast<InstanceId>(id);
  }
  for (int sweep = 0; sweep < 3; ++sweep) {
    Grid<InstanceId> next = out.ids;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        if (out.ids(r, c) != 0 || uniform01(rng) < 0.35) continue;
        const std::pair<int, int> neighbors[4] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& [nr, nc] : neighbors) {
          if (out.ids.in_bounds(nr, nc) && out.ids(nr, nc) != 0) {
            next(r, c) = out.ids(nr, nc);
            break;
          }
        }
      }
    }
    out.ids = next;
  }
  for (const InstanceId id : out.ids.data()) {
    if (id != 0) out.classes[id] = class_of[id];
  }
  return out;
}

ClassMap awkward_class_map() {
  return ClassMap({{"void", 0},
                   {"dry brush", 3},
                   {"water (standing)", 7},
                   {"zone-12", 12},
                   {"high id", 40000}},
                  0);
}

}  // namespace testsupport
