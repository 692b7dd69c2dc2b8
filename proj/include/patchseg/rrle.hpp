// Row run-length text codec for semantic masks.
//
// Canonical form, one line per mask row:
//
//   row  := run ('|' run)*
//   run  := label ' *' count
//
// e.g. "fields *3|trees *2". The decoder is deliberately liberal: it accepts
// arbitrary whitespace around tokens, splits each run at its last '*', maps
// unknown labels to background, skips runs with unparseable or non-positive
// counts, and clamps overlong runs at the pixel budget. It always returns a
// mask of exactly the requested dimensions and reports every repair it made.

#pragma once

#include <string>
#include <string_view>

#include "patchseg/grid.hpp"
#include "patchseg/mask.hpp"

namespace patchseg {

struct DecodeReport {
  SemanticMask mask;
  int truncated_runs = 0;      // runs clipped by the pixel-budget clamp
  int unknown_labels = 0;      // labels absent from the class map, filled as background
  int invalid_runs = 0;        // runs skipped: no '*', bad count, or count <= 0
  int underfilled_pixels = 0;  // trailing pixels left background because the text ended early
};

// Canonical text for a mask. Throws DataError when the mask is empty or holds
// an id without a label.
std::string encode_rrle(const SemanticMask& mask, const ClassMap& cm);

// Robust decode into an exactly height x width mask. The write pointer walks
// the flattened mask: each run fills `count` pixels, an empty line skips a
// full row's worth, and a row that comes up short does not realign to the
// next row boundary. Throws DataError only for non-positive dimensions.
DecodeReport decode_rrle(std::string_view text, const ClassMap& cm, int height, int width);

}  // namespace patchseg
