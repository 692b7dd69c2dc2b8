// Tiled inference: oracle closure, retries, failure accounting, manifests.

#include <doctest.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include <json.hpp>

#include "patchseg/client.hpp"
#include "patchseg/errors.hpp"
#include "patchseg/inference.hpp"
#include "patchseg/rng.hpp"
#include "patchseg/rrle.hpp"
#include "patchseg/tiling.hpp"

#include "support/oracles.hpp"

using namespace patchseg;
using namespace testsupport;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("patchseg_infer_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Runs an arbitrary handler under a lock so tests can keep per-tile state
// without worrying about the pipeline's worker threads.
class ScriptedClient : public ModelClient {
 public:
  explicit ScriptedClient(std::function<ModelResponse(const ModelRequest&)> fn)
      : fn_(std::move(fn)) {}

  ModelResponse complete(const ModelRequest& request) override {
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    return fn_(request);
  }

  int calls() const { return calls_; }

 private:
  std::mutex mutex_;
  int calls_ = 0;
  std::function<ModelResponse(const ModelRequest&)> fn_;
};

InferenceConfig test_config(int patch_h, int patch_w) {
  InferenceConfig cfg;
  cfg.patch_height = patch_h;
  cfg.patch_width = patch_w;
  cfg.sleep_on_retry = false;
  return cfg;
}

}  // namespace

TEST_CASE("inference config validation") {
  InferenceConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  InferenceConfig bad = cfg;
  bad.patch_height = 0;
  CHECK_THROWS_AS(bad.validate(), DataError);

  bad = cfg;
  bad.patch_width = -3;
  CHECK_THROWS_AS(bad.validate(), DataError);

  bad = cfg;
  bad.max_in_flight = 0;
  CHECK_THROWS_AS(bad.validate(), DataError);

  bad = cfg;
  bad.max_retries = -1;
  CHECK_THROWS_AS(bad.validate(), DataError);

  bad = cfg;
  bad.backoff_ms = -0.5;
  CHECK_THROWS_AS(bad.validate(), DataError);

  bad = cfg;
  bad.instruction_template.clear();
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("oracle closure reproduces the ground truth exactly") {
  const ClassMap cm = ClassMap::from_labels({"background", "fields", "trees", "water"});
  Rng rng(417);

  SUBCASE("dimensions that divide the patch size") {
    const SemanticMask gt = random_mask(rng, 48, 64, cm);
    OracleClient oracle(gt, cm);
    const InferenceResult run = run_inference("img-a", 48, 64, test_config(16, 16), oracle, cm);
    CHECK(run.mask == gt);
    CHECK(run.manifest.tiles_total == 12);
    CHECK(run.manifest.tiles_failed == 0);
  }

  SUBCASE("ragged dimensions exercise padded border tiles") {
    const SemanticMask gt = random_mask(rng, 45, 62, cm);
    OracleClient oracle(gt, cm);
    const InferenceResult run = run_inference("img-b", 45, 62, test_config(16, 16), oracle, cm);
    CHECK(run.mask == gt);
    CHECK(run.manifest.tiles_total == 12);  // 3 x 4 grid
    CHECK(run.manifest.padded_height == 48);
    CHECK(run.manifest.padded_width == 64);
    for (const TileRecord& t : run.manifest.tiles) {
      CHECK(t.ok);
      CHECK(t.attempts == 1);
      CHECK(t.status == 200);
      CHECK(t.truncated_runs == 0);
      CHECK(t.unknown_labels == 0);
      CHECK(t.invalid_runs == 0);
      CHECK(t.underfilled_pixels == 0);
    }
  }

  SUBCASE("a 615x615 scene fans out to a 20x20 grid") {
    const SemanticMask gt = random_mask(rng, 615, 615, cm);
    OracleClient oracle(gt, cm);
    InferenceConfig cfg = test_config(32, 32);
    cfg.max_in_flight = 8;
    const InferenceResult run = run_inference("img-c", 615, 615, cfg, oracle, cm);
    CHECK(run.mask == gt);
    CHECK(run.manifest.tiles_total == 400);
    CHECK(run.manifest.padded_height == 640);
    CHECK(run.manifest.padded_width == 640);
  }
}

TEST_CASE("transient failures are retried and recorded") {
  const ClassMap cm = ClassMap::from_labels({"background", "fields"});
  Rng rng(99);
  const SemanticMask gt = random_mask(rng, 20, 20, cm);
  OracleClient oracle(gt, cm);

  SUBCASE("every tile fails once and then succeeds") {
    std::map<std::pair<int, int>, int> seen;
    ScriptedClient flaky([&](const ModelRequest& req) -> ModelResponse {
      if (seen[{req.patch.top, req.patch.left}]++ == 0) return {"", 0.0, 500};
      return oracle.complete(req);
    });

    InferenceConfig cfg = test_config(10, 10);
    cfg.max_retries = 2;
    const InferenceResult run = run_inference("img", 20, 20, cfg, flaky, cm);
    CHECK(run.mask == gt);
    CHECK(run.manifest.tiles_failed == 0);
    for (const TileRecord& t : run.manifest.tiles) {
      CHECK(t.ok);
      CHECK(t.attempts == 2);
      CHECK(t.status == 200);
    }
    CHECK(flaky.calls() == 8);  // 4 tiles x 2 calls
  }

  SUBCASE("a tile that keeps failing becomes background") {
    ScriptedClient partial([&](const ModelRequest& req) -> ModelResponse {
      if (req.patch.top == 0 && req.patch.left == 0) return {"", 0.0, 503};
      return oracle.complete(req);
    });

    InferenceConfig cfg = test_config(10, 10);
    cfg.max_retries = 1;
    const InferenceResult run = run_inference("img", 20, 20, cfg, partial, cm);
    CHECK(run.manifest.tiles_total == 4);
    CHECK(run.manifest.tiles_failed == 1);

    int failed_seen = 0;
    for (const TileRecord& t : run.manifest.tiles) {
      if (t.patch.top == 0 && t.patch.left == 0) {
        ++failed_seen;
        CHECK_FALSE(t.ok);
        CHECK(t.attempts == 2);  // first call plus one retry
        CHECK(t.status == 503);
      } else {
        CHECK(t.ok);
        CHECK(t.attempts == 1);
      }
    }
    CHECK(failed_seen == 1);

    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 20; ++c) {
        const ClassId expected = (r < 10 && c < 10) ? cm.background_id() : gt(r, c);
        CHECK(run.mask(r, c) == expected);
      }
    }
  }

  SUBCASE("transport errors count as attempts too") {
    ScriptedClient dead([](const ModelRequest&) -> ModelResponse { return {"", 0.0, 0}; });
    InferenceConfig cfg = test_config(10, 10);
    cfg.max_retries = 3;
    CHECK_THROWS_AS(run_inference("img", 20, 20, cfg, dead, cm), EndpointError);
    CHECK(dead.calls() == 16);  // 4 tiles x (1 + 3 retries)
  }
}

TEST_CASE("an endpoint that fails every tile raises an endpoint error") {
  const ClassMap cm = ClassMap::from_labels({"background", "fields"});
  ScriptedClient broken([](const ModelRequest&) -> ModelResponse { return {"oops", 0.0, 500}; });
  InferenceConfig cfg = test_config(8, 8);
  cfg.max_retries = 0;
  CHECK_THROWS_WITH_AS(run_inference("img", 16, 16, cfg, broken, cm),
                       doctest::Contains("all 4 tiles failed"), EndpointError);
}

TEST_CASE("decode diagnostics are tracked per tile") {
  const ClassMap cm = ClassMap::from_labels({"background", "fields", "trees"});

  // One 8x8 tile; each subcase scripts a specific malformed reply and checks
  // the record against the reference decoder's counters.
  auto run_with_reply = [&](const std::string& reply) {
    ScriptedClient client([&](const ModelRequest&) -> ModelResponse { return {reply, 1.0, 200}; });
    const InferenceResult run = run_inference("img", 8, 8, test_config(8, 8), client, cm);
    const RefDecode expected = reference_decode(reply, cm, 8, 8);
    REQUIRE(run.manifest.tiles.size() == 1);
    const TileRecord& t = run.manifest.tiles[0];
    CHECK(t.ok);
    CHECK(t.truncated_runs == expected.truncated_runs);
    CHECK(t.unknown_labels == expected.unknown_labels);
    CHECK(t.invalid_runs == expected.invalid_runs);
    CHECK(t.underfilled_pixels == expected.underfilled_pixels);
    CHECK(run.mask == expected.mask);
    return t;
  };

  SUBCASE("overlong run") {
    const TileRecord t = run_with_reply("fields *100");
    CHECK(t.truncated_runs == 1);
    CHECK(t.underfilled_pixels == 0);
  }
  SUBCASE("unknown label") {
    const TileRecord t = run_with_reply("mystery *4");
    CHECK(t.unknown_labels == 1);
    CHECK(t.underfilled_pixels == 60);
  }
  SUBCASE("missing count") {
    const TileRecord t = run_with_reply("fields");
    CHECK(t.invalid_runs == 1);
    CHECK(t.underfilled_pixels == 64);
  }
  SUBCASE("short but valid reply") {
    const TileRecord t = run_with_reply("trees *10");
    CHECK(t.underfilled_pixels == 54);
    CHECK(t.truncated_runs == 0);
  }
}

TEST_CASE("manifest json echoes the configuration and per-tile records") {
  const ClassMap cm = ClassMap::from_labels({"background", "fields"});
  Rng rng(7);
  const SemanticMask gt = random_mask(rng, 10, 14, cm);
  OracleClient oracle(gt, cm);

  InferenceConfig cfg = test_config(8, 8);
  cfg.max_in_flight = 2;
  cfg.max_retries = 5;
  cfg.backoff_ms = 250.0;
  cfg.instruction_template = "describe {h}x{w} at {top},{left}";

  const InferenceResult run = run_inference("scene-042", 10, 14, cfg, oracle, cm);
  const nlohmann::json j = run.manifest.to_json(cfg);

  CHECK(j.at("image") == "scene-042");
  CHECK(j.at("image_height") == 10);
  CHECK(j.at("image_width") == 14);
  CHECK(j.at("padded_height") == 16);
  CHECK(j.at("padded_width") == 16);
  CHECK(j.at("tiles_total") == 4);
  CHECK(j.at("tiles_failed") == 0);

  const nlohmann::json& jc = j.at("config");
  CHECK(jc.at("patch_height") == 8);
  CHECK(jc.at("patch_width") == 8);
  CHECK(jc.at("max_in_flight") == 2);
  CHECK(jc.at("max_retries") == 5);
  CHECK(jc.at("backoff_ms") == 250.0);
  CHECK(jc.at("instruction_template") == "describe {h}x{w} at {top},{left}");

  const nlohmann::json& tiles = j.at("tiles");
  REQUIRE(tiles.size() == 4);
  for (const nlohmann::json& t : tiles) {
    CHECK(t.at("ok") == true);
    CHECK(t.at("attempts") == 1);
    CHECK(t.at("status") == 200);
    CHECK(t.contains("latency_ms"));
    CHECK(t.at("truncated_runs") == 0);
    CHECK(t.at("unknown_labels") == 0);
    CHECK(t.at("invalid_runs") == 0);
    CHECK(t.at("underfilled_pixels") == 0);
  }
  CHECK(tiles[0].at("top") == 0);
  CHECK(tiles[0].at("left") == 0);
  CHECK(tiles[1].at("left") == 8);
}

TEST_CASE("instructions are rendered from the template per tile") {
  const ClassMap cm = ClassMap::from_labels({"background", "fields"});
  std::map<std::pair<int, int>, std::string> instructions;
  ScriptedClient recorder([&](const ModelRequest& req) -> ModelResponse {
    instructions[{req.patch.top, req.patch.left}] = req.instruction;
    CHECK(req.image_ref == "img-77");
    return {"fields *64", 0.0, 200};
  });

  InferenceConfig cfg = test_config(8, 8);
  cfg.instruction_template = "tile {top}/{left} size {h}x{w}";
  run_inference("img-77", 16, 16, cfg, recorder, cm);

  REQUIRE(instructions.size() == 4);
  CHECK(instructions[{0, 0}] == "tile 0/0 size 8x8");
  CHECK(instructions[{0, 8}] == "tile 0/8 size 8x8");
  CHECK(instructions[{8, 0}] == "tile 8/0 size 8x8");
  CHECK(instructions[{8, 8}] == "tile 8/8 size 8x8");
}

TEST_CASE("a replay cache drives a full run") {
  const ClassMap cm = ClassMap::from_labels({"background", "fields", "trees"});
  Rng rng(5150);
  const SemanticMask gt = random_mask(rng, 21, 13, cm);
  const TileGrid grid = patchify(21, 13, 8, 8);

  TempDir dir;
  const fs::path cache = dir.path / "cache.jsonl";

  SUBCASE("complete cache reproduces the ground truth") {
    std::ofstream out(cache);
    for (const PatchSpec& spec : grid.tiles) {
      nlohmann::json line;
      line["image"] = "replayed";
      line["top"] = spec.top;
      line["left"] = spec.left;
      line["text"] = encode_rrle(crop_padded(gt, spec, cm.background_id()), cm);
      out << line.dump() << "\n";
    }
    out.close();

    ReplayClient client(cache);
    const InferenceResult run = run_inference("replayed", 21, 13, test_config(8, 8), client, cm);
    CHECK(run.mask == gt);
    CHECK(run.manifest.tiles_failed == 0);
  }

  SUBCASE("a missing entry fails that tile only") {
    std::ofstream out(cache);
    for (const PatchSpec& spec : grid.tiles) {
      if (spec.top == 16 && spec.left == 8) continue;
      nlohmann::json line;
      line["image"] = "replayed";
      line["top"] = spec.top;
      line["left"] = spec.left;
      line["text"] = encode_rrle(crop_padded(gt, spec, cm.background_id()), cm);
      out << line.dump() << "\n";
    }
    out.close();

    ReplayClient client(cache);
    InferenceConfig cfg = test_config(8, 8);
    cfg.max_retries = 0;
    const InferenceResult run = run_inference("replayed", 21, 13, cfg, client, cm);
    CHECK(run.manifest.tiles_total == 6);
    CHECK(run.manifest.tiles_failed == 1);
    for (const TileRecord& t : run.manifest.tiles) {
      if (t.patch.top == 16 && t.patch.left == 8) {
        CHECK_FALSE(t.ok);
        CHECK(t.status == 404);
      } else {
        CHECK(t.ok);
      }
    }
    for (int r = 16; r < 21; ++r) {
      for (int c = 8; c < 13; ++c) CHECK(run.mask(r, c) == cm.background_id());
    }
  }
}
