#include "patchseg/inference.hpp"

#include <chrono>
#include <thread>

#include "patchseg/dataset.hpp"
#include "patchseg/errors.hpp"
#include "patchseg/parallel.hpp"
#include "patchseg/rrle.hpp"

namespace patchseg {

void InferenceConfig::validate() const {
  if (patch_height <= 0 || patch_width <= 0) throw DataError("patch dimensions must be positive");
  if (max_in_flight < 1) throw DataError("max_in_flight must be positive");
  if (max_retries < 0) throw DataError("max_retries must be non-negative");
  if (backoff_ms < 0) throw DataError("backoff_ms must be non-negative");
  if (instruction_template.empty()) throw DataError("instruction template must not be empty");
}

nlohmann::json RunManifest::to_json(const InferenceConfig& cfg) const {
  nlohmann::json tile_array = nlohmann::json::array();
  for (const TileRecord& t : tiles) {
    tile_array.push_back({{"top", t.patch.top},
                          {"left", t.patch.left},
                          {"ok", t.ok},
                          {"attempts", t.attempts},
                          {"status", t.status},
                          {"latency_ms", t.latency_ms},
                          {"truncated_runs", t.truncated_runs},
                          {"unknown_labels", t.unknown_labels},
                          {"invalid_runs", t.invalid_runs},
                          {"underfilled_pixels", t.underfilled_pixels}});
  }
  return nlohmann::json{{"image", image_ref},
                        {"image_height", image_height},
                        {"image_width", image_width},
                        {"padded_height", padded_height},
                        {"padded_width", padded_width},
                        {"tiles_total", tiles_total},
                        {"tiles_failed", tiles_failed},
                        {"config",
                         {{"patch_height", cfg.patch_height},
                          {"patch_width", cfg.patch_width},
                          {"max_in_flight", cfg.max_in_flight},
                          {"max_retries", cfg.max_retries},
                          {"backoff_ms", cfg.backoff_ms},
                          {"instruction_template", cfg.instruction_template}}},
                        {"tiles", std::move(tile_array)}};
}

InferenceResult run_inference(const std::string& image_ref, int image_height, int image_width,
                              const InferenceConfig& cfg, ModelClient& client, const ClassMap& cm) {
  cfg.validate();
  const TileGrid grid = patchify(image_height, image_width, cfg.patch_height, cfg.patch_width);

  std::vector<std::pair<PatchSpec, SemanticMask>> tiles(grid.tiles.size());
  std::vector<TileRecord> records(grid.tiles.size());

  parallel_for(grid.tiles.size(), cfg.max_in_flight, [&](std::size_t i) {
    const PatchSpec& spec = grid.tiles[i];
    TileRecord record;
    record.patch = spec;

    ModelResponse response;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      if (attempt > 0 && cfg.sleep_on_retry && cfg.backoff_ms > 0) {
        const double wait = cfg.backoff_ms * static_cast<double>(1 << (attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(wait));
      }
      response =
          client.complete({image_ref, spec, render_instruction(cfg.instruction_template, spec)});
      ++record.attempts;
      record.status = response.status;
      record.latency_ms += response.latency_ms;
      if (response.ok()) break;
    }

    if (response.ok()) {
      const DecodeReport decoded = decode_rrle(response.text, cm, spec.height, spec.width);
      record.ok = true;
      record.truncated_runs = decoded.truncated_runs;
      record.unknown_labels = decoded.unknown_labels;
      record.invalid_runs = decoded.invalid_runs;
      record.underfilled_pixels = decoded.underfilled_pixels;
      tiles[i] = {spec, decoded.mask};
    } else {
      tiles[i] = {spec, SemanticMask(spec.height, spec.width, cm.background_id())};
    }
    records[i] = std::move(record);
  });

  RunManifest manifest;
  manifest.image_ref = image_ref;
  manifest.image_height = image_height;
  manifest.image_width = image_width;
  manifest.padded_height = grid.padded_height;
  manifest.padded_width = grid.padded_width;
  manifest.tiles_total = grid.tiles.size();
  manifest.tiles = std::move(records);
  for (const TileRecord& t : manifest.tiles) manifest.tiles_failed += !t.ok;

  if (manifest.tiles_failed == manifest.tiles_total) {
    throw EndpointError("all " + std::to_string(manifest.tiles_total) +
                        " tiles failed; endpoint unusable");
  }

  InferenceResult result{stitch(tiles, grid, cm.background_id()), std::move(manifest)};
  return result;
}

}  // namespace patchseg
