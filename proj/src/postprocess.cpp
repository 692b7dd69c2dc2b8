#include "patchseg/postprocess.hpp"

#include <queue>
#include <tuple>
#include <vector>

#include "patchseg/errors.hpp"

namespace patchseg {

namespace {

constexpr int kNeighborRow[4] = {-1, 1, 0, 0};
constexpr int kNeighborCol[4] = {0, 0, -1, 1};

}  // namespace

BoundaryMap extract_boundaries(const SemanticMask& mask) {
  BoundaryMap out(mask.height(), mask.width(), 0.0f);
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      for (int n = 0; n < 4; ++n) {
        const int nr = r + kNeighborRow[n];
        const int nc = c + kNeighborCol[n];
        if (mask.in_bounds(nr, nc) && mask(nr, nc) != mask(r, c)) {
          out(r, c) = 1.0f;
          break;
        }
      }
    }
  }
  return out;
}

InstanceMap watershed_instances(const SemanticMask& mask, const BoundaryMap& boundaries,
                                double threshold, ClassId background) {
  if (mask.height() != boundaries.height() || mask.width() != boundaries.width()) {
    throw DataError("mask and boundary map differ in shape");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw DataError("watershed threshold must lie in (0, 1]");
  }

  InstanceMap result;
  result.ids = Grid<InstanceId>(mask.height(), mask.width(), 0);
  auto& ids = result.ids;

  const auto is_marker_pixel = [&](int r, int c) {
    return mask(r, c) != background && boundaries(r, c) < static_cast<float>(threshold);
  };

  // Pass 1: label marker components in row-major discovery order.
  InstanceId next_id = 1;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (ids(r, c) != 0 || !is_marker_pixel(r, c)) continue;
      const ClassId cls = mask(r, c);
      const InstanceId id = next_id++;
      result.classes[id] = cls;
      ids(r, c) = id;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const auto [cr, cc] = stack.back();
        stack.pop_back();
        for (int n = 0; n < 4; ++n) {
          const int nr = cr + kNeighborRow[n];
          const int nc = cc + kNeighborCol[n];
          if (mask.in_bounds(nr, nc) && ids(nr, nc) == 0 && mask(nr, nc) == cls &&
              is_marker_pixel(nr, nc)) {
            ids(nr, nc) = id;
            stack.push_back({nr, nc});
          }
        }
      }
    }
  }

  // Pass 2: ascending flood over ridge pixels. Claims pop by (strength,
  // instance id, row, col) so equal-strength contention goes to the lower id
  // and the result never depends on container internals.
  using Claim = std::tuple<float, InstanceId, int, int>;
  std::priority_queue<Claim, std::vector<Claim>, std::greater<Claim>> queue;
  const auto push_claims_around = [&](int r, int c, InstanceId id, ClassId cls) {
    for (int n = 0; n < 4; ++n) {
      const int nr = r + kNeighborRow[n];
      const int nc = c + kNeighborCol[n];
      if (mask.in_bounds(nr, nc) && ids(nr, nc) == 0 && mask(nr, nc) == cls) {
        queue.push({boundaries(nr, nc), id, nr, nc});
      }
    }
  };
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (ids(r, c) != 0) push_claims_around(r, c, ids(r, c), mask(r, c));
    }
  }
  while (!queue.empty()) {
    const auto [strength, id, r, c] = queue.top();
    queue.pop();
    if (ids(r, c) != 0) continue;  // an earlier claim won
    ids(r, c) = id;
    push_claims_around(r, c, id, mask(r, c));
  }

  // Pass 3: ridge components no marker could reach become instances.
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (ids(r, c) != 0 || mask(r, c) == background) continue;
      const ClassId cls = mask(r, c);
      const InstanceId id = next_id++;
      result.classes[id] = cls;
      ids(r, c) = id;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const auto [cr, cc] = stack.back();
        stack.pop_back();
        for (int n = 0; n < 4; ++n) {
          const int nr = cr + kNeighborRow[n];
          const int nc = cc + kNeighborCol[n];
          if (mask.in_bounds(nr, nc) && ids(nr, nc) == 0 && mask(nr, nc) == cls) {
            ids(nr, nc) = id;
            stack.push_back({nr, nc});
          }
        }
      }
    }
  }

  return result;
}

}  // namespace patchseg
