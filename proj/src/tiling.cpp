#include "patchseg/tiling.hpp"

#include <span>
#include <vector>

#include "patchseg/errors.hpp"

namespace patchseg {

TileGrid patchify(int image_height, int image_width, int patch_height, int patch_width) {
  if (image_height <= 0 || image_width <= 0) throw DataError("image dimensions must be positive");
  if (patch_height <= 0 || patch_width <= 0) throw DataError("patch dimensions must be positive");
  TileGrid grid;
  grid.image_height = image_height;
  grid.image_width = image_width;
  grid.patch_height = patch_height;
  grid.patch_width = patch_width;
  const int rows = (image_height + patch_height - 1) / patch_height;
  const int cols = (image_width + patch_width - 1) / patch_width;
  grid.padded_height = rows * patch_height;
  grid.padded_width = cols * patch_width;
  grid.tiles.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      grid.tiles.push_back({r * patch_height, c * patch_width, patch_height, patch_width});
    }
  }
  return grid;
}

SemanticMask stitch(std::span<const std::pair<PatchSpec, SemanticMask>> tiles,
                    const TileGrid& grid, ClassId background) {
  SemanticMask padded(grid.padded_height, grid.padded_width, background);
  std::vector<bool> seen(grid.tiles.size(), false);

  for (const auto& [spec, tile] : tiles) {
    std::size_t slot = grid.tiles.size();
    for (std::size_t i = 0; i < grid.tiles.size(); ++i) {
      if (grid.tiles[i] == spec) {
        slot = i;
        break;
      }
    }
    if (slot == grid.tiles.size()) throw DataError(to_string(spec) + " is not a grid tile");
    if (seen[slot]) throw DataError(to_string(spec) + " appears more than once");
    seen[slot] = true;
    if (tile.height() != spec.height || tile.width() != spec.width) {
      throw DataError(to_string(spec) + " received a " + std::to_string(tile.height()) + "x" +
                      std::to_string(tile.width()) + " tile");
    }
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        padded(spec.top + r, spec.left + c) = tile(r, c);
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw DataError("missing tile " + to_string(grid.tiles[i]));
  }

  if (grid.padded_height == grid.image_height && grid.padded_width == grid.image_width) {
    return padded;
  }
  SemanticMask out(grid.image_height, grid.image_width);
  for (int r = 0; r < grid.image_height; ++r) {
    for (int c = 0; c < grid.image_width; ++c) out(r, c) = padded(r, c);
  }
  return out;
}

}  // namespace patchseg
