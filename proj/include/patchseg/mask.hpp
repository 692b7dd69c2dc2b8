// Core data model: class maps, semantic masks, instance maps, patch specs.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "patchseg/grid.hpp"

namespace patchseg {

// Rectangular window into an image, (top, left) of the upper-left pixel.
struct PatchSpec {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

std::string to_string(const PatchSpec& p);

// Bidirectional label <-> id table. Labels are non-empty, must not contain
// '*', '|', or '\n', and must not start or end with whitespace (all of which
// would collide with mask-text syntax); ids are unique; the background id is
// always present. Immutable once constructed.
class ClassMap {
 public:
  struct Entry {
    std::string label;
    ClassId id = 0;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  ClassMap(std::vector<Entry> entries, ClassId background_id = 0);

  // Convenience: labels[i] gets id i; labels[0] is the background class.
  static ClassMap from_labels(const std::vector<std::string>& labels);

  const std::vector<Entry>& entries() const { return entries_; }
  ClassId background_id() const { return background_id_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<ClassId> id_of(std::string_view label) const;
  bool has_id(ClassId id) const { return label_by_id_.count(id) != 0; }
  // Throws DataError for ids absent from the map.
  const std::string& label_of(ClassId id) const;

  friend bool operator==(const ClassMap& a, const ClassMap& b) {
    return a.entries_ == b.entries_ && a.background_id_ == b.background_id_;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, ClassId> id_by_label_;
  std::unordered_map<ClassId, std::string> label_by_id_;
  ClassId background_id_ = 0;
};

// Instance labeling over a mask: per-pixel instance ids plus a table mapping
// each instance id to its class. Id 0 means "no instance" and never appears
// in the table; every nonzero id on the grid has a table entry and every
// table entry covers at least one pixel.
struct InstanceMap {
  Grid<InstanceId> ids;
  std::map<InstanceId, ClassId> classes;
};

// Throws DataError if the mask holds a value missing from the class map.
void validate_mask(const SemanticMask& mask, const ClassMap& cm);

// Throws DataError if the id grid and class table disagree (see InstanceMap).
void validate_instance_map(const InstanceMap& im, const ClassMap& cm);

// Per-pixel class lookup; pixels with instance id 0 become background.
SemanticMask instance_to_semantic(const InstanceMap& im, const ClassMap& cm);

// Copies the window; throws DataError when the patch leaves the mask.
SemanticMask crop(const SemanticMask& mask, const PatchSpec& patch);

// Like crop, but out-of-bounds pixels read as `fill` instead of throwing.
SemanticMask crop_padded(const SemanticMask& mask, const PatchSpec& patch, ClassId fill);

}  // namespace patchseg
