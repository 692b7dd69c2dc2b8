#include "patchseg/mask.hpp"

#include <string>

#include "patchseg/errors.hpp"

namespace patchseg {

std::string to_string(const PatchSpec& p) {
  return "patch(top=" + std::to_string(p.top) + ",left=" + std::to_string(p.left) +
         ",h=" + std::to_string(p.height) + ",w=" + std::to_string(p.width) + ")";
}

ClassMap::ClassMap(std::vector<Entry> entries, ClassId background_id)
    : entries_(std::move(entries)), background_id_(background_id) {
  if (entries_.empty()) throw DataError("class map must not be empty");
  for (const Entry& e : entries_) {
    if (e.label.empty()) throw DataError("class label must not be empty");
    if (e.label.find_first_of("*|\n") != std::string::npos) {
      throw DataError("class label '" + e.label + "' contains a reserved character");
    }
    if (std::string_view(" \t\r\f\v").find(e.label.front()) != std::string_view::npos ||
        std::string_view(" \t\r\f\v").find(e.label.back()) != std::string_view::npos) {
      // The liberal decoder trims run labels, so edge whitespace could never
      // survive a text round trip.
      throw DataError("class label '" + e.label + "' starts or ends with whitespace");
    }
    if (!id_by_label_.emplace(e.label, e.id).second) {
      throw DataError("duplicate class label '" + e.label + "'");
    }
    if (!label_by_id_.emplace(e.id, e.label).second) {
      throw DataError("duplicate class id " + std::to_string(e.id));
    }
  }
  if (label_by_id_.count(background_id_) == 0) {
    throw DataError("background id " + std::to_string(background_id_) + " missing from class map");
  }
}

ClassMap ClassMap::from_labels(const std::vector<std::string>& labels) {
  std::vector<Entry> entries;
  entries.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    entries.push_back({labels[i], static_cast<ClassId>(i)});
  }
  return ClassMap(std::move(entries), 0);
}

std::optional<ClassId> ClassMap::id_of(std::string_view label) const {
  auto it = id_by_label_.find(std::string(label));
  if (it == id_by_label_.end()) return std::nullopt;
  return it->second;
}

const std::string& ClassMap::label_of(ClassId id) const {
  auto it = label_by_id_.find(id);
  if (it == label_by_id_.end()) {
    throw DataError("class id " + std::to_string(id) + " missing from class map");
  }
  return it->second;
}

void validate_mask(const SemanticMask& mask, const ClassMap& cm) {
  for (ClassId v : mask.data()) {
    if (!cm.has_id(v)) {
      throw DataError("mask value " + std::to_string(v) + " missing from class map");
    }
  }
}

void validate_instance_map(const InstanceMap& im, const ClassMap& cm) {
  std::map<InstanceId, long> pixel_counts;
  for (InstanceId id : im.ids.data()) {
    if (id == 0) continue;
    ++pixel_counts[id];
    if (im.classes.count(id) == 0) {
      throw DataError("instance id " + std::to_string(id) + " missing from class table");
    }
  }
  for (const auto& [id, class_id] : im.classes) {
    if (id == 0) throw DataError("instance id 0 is reserved and may not be listed");
    if (!cm.has_id(class_id)) {
      throw DataError("instance " + std::to_string(id) + " has class " +
                      std::to_string(class_id) + " missing from class map");
    }
    if (pixel_counts.count(id) == 0) {
      throw DataError("instance id " + std::to_string(id) + " covers no pixels");
    }
  }
}

SemanticMask instance_to_semantic(const InstanceMap& im, const ClassMap& cm) {
  validate_instance_map(im, cm);
  SemanticMask out(im.ids.height(), im.ids.width(), cm.background_id());
  for (std::size_t i = 0; i < im.ids.data().size(); ++i) {
    const InstanceId id = im.ids.data()[i];
    if (id != 0) out.data()[i] = im.classes.at(id);
  }
  return out;
}

SemanticMask crop(const SemanticMask& mask, const PatchSpec& patch) {
  if (patch.height <= 0 || patch.width <= 0) {
    throw DataError(to_string(patch) + " has non-positive dimensions");
  }
  if (patch.top < 0 || patch.left < 0 || patch.top + patch.height > mask.height() ||
      patch.left + patch.width > mask.width()) {
    throw DataError(to_string(patch) + " leaves the " + std::to_string(mask.height()) + "x" +
                    std::to_string(mask.width()) + " mask");
  }
  SemanticMask out(patch.height, patch.width);
  for (int r = 0; r < patch.height; ++r) {
    for (int c = 0; c < patch.width; ++c) {
      out(r, c) = mask(patch.top + r, patch.left + c);
    }
  }
  return out;
}

SemanticMask crop_padded(const SemanticMask& mask, const PatchSpec& patch, ClassId fill) {
  if (patch.height <= 0 || patch.width <= 0) {
    throw DataError(to_string(patch) + " has non-positive dimensions");
  }
  SemanticMask out(patch.height, patch.width, fill);
  for (int r = 0; r < patch.height; ++r) {
    for (int c = 0; c < patch.width; ++c) {
      const int sr = patch.top + r;
      const int sc = patch.left + c;
      if (mask.in_bounds(sr, sc)) out(r, c) = mask(sr, sc);
    }
  }
  return out;
}

}  // namespace patchseg
