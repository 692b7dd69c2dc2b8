#include "patchseg/synth.hpp"

#include <algorithm>
#include <cmath>

#include "patchseg/errors.hpp"
#include "patchseg/rng.hpp"

namespace patchseg {

void SynthConfig::validate() const {
  if (height < 8 || width < 8) throw DataError("synthetic scenes need at least 8x8 pixels");
  if (scenes < 1) throw DataError("scene count must be positive");
  if (min_instances < 1 || max_instances < min_instances) {
    throw DataError("instance count range is empty");
  }
  if (class_labels.size() < 2) throw DataError("need background plus at least one class");
}

ClassMap SynthConfig::class_map() const { return ClassMap::from_labels(class_labels); }

namespace {

struct Stamp {
  int top, left, height, width;
  bool ellipse;

  bool covers(int r, int c) const {
    if (!ellipse) return true;
    const double cy = top + (height - 1) / 2.0;
    const double cx = left + (width - 1) / 2.0;
    const double ry = height / 2.0;
    const double rx = width / 2.0;
    const double dy = (r - cy) / ry;
    const double dx = (c - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
  }
};

}  // namespace

Scene generate_scene(const SynthConfig& cfg, std::uint64_t scene_index) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, scene_index));

  Scene scene;
  scene.instances.ids = Grid<InstanceId>(cfg.height, cfg.width, 0);
  scene.semantic = SemanticMask(cfg.height, cfg.width, 0);

  const int class_count = static_cast<int>(cfg.class_labels.size()) - 1;
  const int wanted = uniform_int(rng, cfg.min_instances, cfg.max_instances);
  const int max_side = std::min({cfg.height, cfg.width, 96});
  InstanceId next_id = 1;

  for (int k = 0; k < wanted; ++k) {
    // Geometric class weights: class 1 is the workhorse, later ones rarer.
    int cls = 1;
    while (cls < class_count && uniform01(rng) < 0.5) ++cls;

    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      // Log-uniform sides spread instances across area scales.
      const double lo = std::log(2.0);
      const double hi = std::log(static_cast<double>(max_side));
      const int h = static_cast<int>(std::lround(std::exp(lo + (hi - lo) * uniform01(rng))));
      const int w = static_cast<int>(std::lround(std::exp(lo + (hi - lo) * uniform01(rng))));
      if (h < 1 || w < 1 || h > cfg.height || w > cfg.width) continue;

      Stamp stamp;
      stamp.height = h;
      stamp.width = w;
      stamp.top = uniform_int(rng, 0, cfg.height - h);
      stamp.left = uniform_int(rng, 0, cfg.width - w);
      stamp.ellipse = h >= 4 && w >= 4 && uniform01(rng) < 0.4;

      // The stamp plus a one-pixel margin must land on untouched background;
      // that margin is what keeps every instance watershed-separable.
      bool clear = true;
      for (int r = stamp.top - 1; r <= stamp.top + h && clear; ++r) {
        for (int c = stamp.left - 1; c <= stamp.left + w && clear; ++c) {
          if (scene.instances.ids.in_bounds(r, c) && scene.instances.ids(r, c) != 0) clear = false;
        }
      }
      if (!clear) continue;

      int pixels = 0;
      for (int r = stamp.top; r < stamp.top + h; ++r) {
        for (int c = stamp.left; c < stamp.left + w; ++c) {
          if (!stamp.covers(r, c)) continue;
          scene.instances.ids(r, c) = next_id;
          scene.semantic(r, c) = static_cast<ClassId>(cls);
          ++pixels;
        }
      }
      if (pixels == 0) continue;
      scene.instances.classes[next_id] = static_cast<ClassId>(cls);
      ++next_id;
      placed = true;
    }
  }
  return scene;
}

}  // namespace patchseg
