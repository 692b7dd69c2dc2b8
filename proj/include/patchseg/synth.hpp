// Synthetic ground-truth scenes for demos and closed-loop tests.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patchseg/mask.hpp"

namespace patchseg {

struct SynthConfig {
  int height = 128;
  int width = 128;
  int scenes = 4;
  int min_instances = 6;
  int max_instances = 14;
  std::uint64_t seed = 0;
  // Index 0 is background; later entries are stamped with decreasing
  // frequency (weight 2^-i), matching a fields-heavy land-use mix.
  std::vector<std::string> class_labels = {"background", "fields", "trees", "clouds", "ponds"};

  void validate() const;  // throws DataError
  ClassMap class_map() const;
};

struct Scene {
  InstanceMap instances;
  SemanticMask semantic;
};

// Stamps axis-aligned rectangles and ellipses of varying size. Every
// instance keeps a one-pixel background margin from every other, so
// class-transition boundaries always separate instances and the watershed
// can recover the layout exactly. Instance ids start at 1 per scene.
Scene generate_scene(const SynthConfig& cfg, std::uint64_t scene_index);

}  // namespace patchseg
