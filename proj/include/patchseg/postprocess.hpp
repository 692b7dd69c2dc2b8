// Semantic-to-instance postprocessing: class-transition boundaries and
// marker-based watershed.

#pragma once

#include "patchseg/grid.hpp"
#include "patchseg/mask.hpp"

namespace patchseg {

// Strength 1 where any 4-neighbor holds a different class, else 0.
BoundaryMap extract_boundaries(const SemanticMask& mask);

// Instances from a semantic mask and a boundary-strength map in [0, 1].
//
// Markers are 4-connected same-class components of non-background pixels
// whose boundary strength falls below `threshold`, labeled 1, 2, ... in
// row-major discovery order. Remaining (ridge) pixels are flooded by ascending boundary strength
// within their own class; a ridge pixel joins the marker that reaches it
// first, equal-strength claims resolving to the lower instance id. Connected
// ridge regions no marker can reach become instances of their own. Background
// pixels keep instance id 0.
//
// The result partitions the non-background pixels: each instance is
// 4-connected, single-class, and listed in the class table.
InstanceMap watershed_instances(const SemanticMask& mask, const BoundaryMap& boundaries,
                                double threshold = 0.5, ClassId background = 0);

}  // namespace patchseg
