// infer: tiled mask prediction against an endpoint, replay cache, or oracle.

#include <memory>
#include <string>

#include "patchseg/client.hpp"
#include "patchseg/errors.hpp"
#include "patchseg/inference.hpp"
#include "patchseg/io.hpp"

#include "common.hpp"

namespace patchseg::cli {

namespace {

struct InferOptions {
  std::string image_ref;
  int height = 0;
  int width = 0;
  std::filesystem::path classes;

  std::string endpoint;
  std::string model = "default";
  std::string auth_env;
  double timeout_seconds = 30.0;
  std::filesystem::path cache;
  std::filesystem::path oracle_mask;

  InferenceConfig cfg;
};

}  // namespace

void register_infer(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<InferOptions>();
  CLI::App* cmd = app.add_subcommand("infer", "Predict a full semantic mask tile by tile");
  cmd->add_option("--classes", opts->classes, "Class map JSON")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::Option* endpoint =
      cmd->add_option("--endpoint", opts->endpoint, "Chat-completion endpoint URL");
  cmd->add_option("--model", opts->model, "Model name sent to the endpoint")
      ->capture_default_str();
  cmd->add_option("--auth-env", opts->auth_env, "Environment variable holding a bearer token");
  cmd->add_option("--timeout", opts->timeout_seconds, "Endpoint timeout in seconds")
      ->capture_default_str();
  CLI::Option* cache =
      cmd->add_option("--cache", opts->cache, "Replay responses from a JSONL cache")
          ->check(CLI::ExistingFile);
  CLI::Option* oracle =
      cmd->add_option("--oracle-mask", opts->oracle_mask,
                      "Answer from this ground-truth mask PNG (closed-loop testing)")
          ->check(CLI::ExistingFile);
  endpoint->excludes(cache)->excludes(oracle);
  cache->excludes(oracle);

  CLI::Option* image =
      cmd->add_option("--image", opts->image_ref, "Image reference sent with each request");
  CLI::Option* height = cmd->add_option("--height", opts->height, "Image height");
  CLI::Option* width = cmd->add_option("--width", opts->width, "Image width");
  height->needs(image);
  width->needs(image);

  cmd->add_option("--patch-height", opts->cfg.patch_height, "Tile height")
      ->capture_default_str();
  cmd->add_option("--patch-width", opts->cfg.patch_width, "Tile width")->capture_default_str();
  cmd->add_option("--max-retries", opts->cfg.max_retries, "Retries after a failed tile request")
      ->capture_default_str();
  cmd->add_option("--backoff-ms", opts->cfg.backoff_ms, "Base retry backoff in milliseconds")
      ->capture_default_str();
  cmd->add_option("--instruction", opts->cfg.instruction_template,
                  "Instruction template with {top} {left} {h} {w} slots");

  cmd->callback([opts, &g] {
    const std::filesystem::path out = require_out(g);
    const ClassMap cm = read_class_map(opts->classes);
    opts->cfg.max_in_flight = g.jobs;

    std::unique_ptr<ModelClient> client;
    std::string source;
    if (!opts->oracle_mask.empty()) {
      const SemanticMask gt = read_mask_png(opts->oracle_mask);
      validate_mask(gt, cm);
      if (opts->image_ref.empty()) opts->image_ref = scene_base_name(opts->oracle_mask);
      if (opts->height == 0) opts->height = gt.height();
      if (opts->width == 0) opts->width = gt.width();
      client = std::make_unique<OracleClient>(gt, cm);
      source = "oracle:" + opts->oracle_mask.string();
    } else if (!opts->cache.empty()) {
      client = std::make_unique<ReplayClient>(opts->cache);
      source = "cache:" + opts->cache.string();
    } else if (!opts->endpoint.empty()) {
      client = std::make_unique<HttpModelClient>(
          HttpClientConfig{opts->endpoint, opts->model, opts->auth_env, opts->timeout_seconds});
      source = "endpoint:" + opts->endpoint;
    } else {
      throw DataError("pick a response source: --endpoint, --cache, or --oracle-mask");
    }
    if (opts->image_ref.empty() || opts->height <= 0 || opts->width <= 0) {
      throw DataError("--image, --height, and --width are required unless --oracle-mask is used");
    }

    const InferenceResult result = run_inference(opts->image_ref, opts->height, opts->width,
                                                 opts->cfg, *client, cm);

    const std::filesystem::path mask_path = out / (opts->image_ref + "_semantic.png");
    write_mask_png(mask_path, result.mask);

    nlohmann::json manifest = result.manifest.to_json(opts->cfg);
    manifest["command"] = "infer";
    manifest["global"] = g.echo();
    manifest["source"] = source;
    manifest["classes"] = opts->classes.string();
    manifest["output"] = mask_path.string();
    write_json_file(out / (opts->image_ref + ".infer.json"), manifest);

    if (result.manifest.tiles_failed > 0) {
      const std::string note =
          std::to_string(result.manifest.tiles_failed) + " of " +
          std::to_string(result.manifest.tiles_total) + " tiles failed and were backfilled";
      if (g.strict) throw DataError(note);
      warn(note);
    }
  });
}

}  // namespace patchseg::cli
