// Disjoint tile grids over padded images, and stitching back.

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "patchseg/grid.hpp"
#include "patchseg/mask.hpp"

namespace patchseg {

struct TileGrid {
  int image_height = 0;
  int image_width = 0;
  int patch_height = 0;
  int patch_width = 0;
  int padded_height = 0;  // smallest multiple of patch_height >= image_height
  int padded_width = 0;
  std::vector<PatchSpec> tiles;  // row-major over the padded image, disjoint, exhaustive
};

TileGrid patchify(int image_height, int image_width, int patch_height, int patch_width);

// Reassembles tiles into the padded canvas and crops to the image size.
// Requires exactly one tile per grid spec; a missing or duplicated spec
// throws DataError naming the offender.
SemanticMask stitch(std::span<const std::pair<PatchSpec, SemanticMask>> tiles,
                    const TileGrid& grid, ClassId background);

}  // namespace patchseg
