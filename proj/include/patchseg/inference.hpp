// Tiled inference: request every tile, robust-decode, stitch, report.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "patchseg/client.hpp"
#include "patchseg/mask.hpp"
#include "patchseg/tiling.hpp"

namespace patchseg {

struct InferenceConfig {
  int patch_height = 32;
  int patch_width = 32;
  int max_in_flight = 4;
  int max_retries = 2;           // attempts beyond the first
  double backoff_ms = 100.0;     // doubled per retry; zero in tests
  bool sleep_on_retry = true;
  std::string instruction_template =
      "Segment the {h}x{w} patch at row {top}, column {left} of the provided image; "
      "answer only with the run-length mask.";

  void validate() const;  // throws DataError
};

struct TileRecord {
  PatchSpec patch;
  bool ok = false;
  int attempts = 0;
  int status = 0;  // final status
  double latency_ms = 0;
  int truncated_runs = 0;
  int unknown_labels = 0;
  int invalid_runs = 0;
  int underfilled_pixels = 0;
};

struct RunManifest {
  std::string image_ref;
  int image_height = 0;
  int image_width = 0;
  int padded_height = 0;
  int padded_width = 0;
  std::size_t tiles_total = 0;
  std::size_t tiles_failed = 0;
  std::vector<TileRecord> tiles;

  nlohmann::json to_json(const InferenceConfig& cfg) const;
};

struct InferenceResult {
  SemanticMask mask;
  RunManifest manifest;
};

// Requests every tile of the padded grid (concurrently up to max_in_flight),
// decodes responses robustly, and stitches. A tile that stays failed after
// retries becomes background and is recorded; only a run where every tile
// failed throws EndpointError.
InferenceResult run_inference(const std::string& image_ref, int image_height, int image_width,
                              const InferenceConfig& cfg, ModelClient& client, const ClassMap& cm);

}  // namespace patchseg
