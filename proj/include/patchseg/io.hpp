// File formats: single-channel PNG masks, PFM float rasters, JSON sidecars.

#pragma once

#include <filesystem>
#include <string>

#include "patchseg/grid.hpp"
#include "patchseg/mask.hpp"

namespace patchseg {

// Grayscale PNG holding ids. Bit depth is 8 when every value fits in a byte,
// 16 otherwise; values above 65535 are rejected.
void write_id_png(const std::filesystem::path& path, const Grid<std::uint32_t>& grid);
void write_mask_png(const std::filesystem::path& path, const SemanticMask& mask);
Grid<std::uint32_t> read_id_png(const std::filesystem::path& path);
SemanticMask read_mask_png(const std::filesystem::path& path);

// Boundary rasters: PNG stores rounded strength * 255 (or * 65535 at 16 bit),
// PFM ("Pf", scanlines bottom-up) stores exact float32 values.
void write_boundary_png(const std::filesystem::path& path, const BoundaryMap& map);
void write_boundary_pfm(const std::filesystem::path& path, const BoundaryMap& map);
// Dispatches on extension: .pfm exact floats, anything else PNG mapped to
// [0, 1] by bit depth.
BoundaryMap read_boundary(const std::filesystem::path& path);

// Class map sidecar:
//   {"classes": [{"label": "fields", "id": 1}, ...], "background_id": 0}
void write_class_map(const std::filesystem::path& path, const ClassMap& cm);
ClassMap read_class_map(const std::filesystem::path& path);

// Instance class table: {"7": 2, ...} mapping instance id to class id.
void write_instance_table(const std::filesystem::path& path,
                          const std::map<InstanceId, ClassId>& classes);
std::map<InstanceId, ClassId> read_instance_table(const std::filesystem::path& path);

// Instance map as a 16-bit-capable PNG plus the class-table sidecar.
void write_instance_map(const std::filesystem::path& png_path,
                        const std::filesystem::path& table_path, const InstanceMap& im);
InstanceMap read_instance_map(const std::filesystem::path& png_path,
                              const std::filesystem::path& table_path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace patchseg
