// evaluate: instance-level metrics over paired prediction/ground-truth scenes.
// overhead: adapter-parameter accounting relative to a frozen base model.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "patchseg/errors.hpp"
#include "patchseg/eval.hpp"
#include "patchseg/io.hpp"

#include "common.hpp"

namespace patchseg::cli {

namespace {

struct EvaluateOptions {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::filesystem::path classes;
  double gsd = 0;
  bool empty_na = false;
  ParamCounts params;
  bool with_params = false;
};

struct OverheadOptions {
  ParamCounts params;
};

// Scene bases under `dir` that have both <base>_instances.png and .json.
std::vector<std::string> instance_scenes(const std::filesystem::path& dir) {
  std::vector<std::string> scenes;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::filesystem::path& p = entry.path();
    if (p.extension() != ".png") continue;
    const std::string stem = p.stem().string();
    const std::string suffix = "_instances";
    if (stem.size() <= suffix.size() || !stem.ends_with(suffix)) continue;
    if (!std::filesystem::exists(dir / (stem + ".json"))) {
      throw DataError("instance map " + p.string() + " has no class-table sidecar");
    }
    scenes.push_back(stem.substr(0, stem.size() - suffix.size()));
  }
  std::sort(scenes.begin(), scenes.end());
  return scenes;
}

InstanceMap load_scene(const std::filesystem::path& dir, const std::string& scene) {
  return read_instance_map(dir / (scene + "_instances.png"), dir / (scene + "_instances.json"));
}

nlohmann::json overhead_json(const ParamCounts& params) {
  const double pct = overhead_percent(params);
  char display[32];
  std::snprintf(display, sizeof display, "%.2f%%", pct);
  return {{"base", params.base},
          {"projection", params.projection},
          {"decoder", params.decoder},
          {"overhead_pct", pct},
          {"display", display}};
}

}  // namespace

void register_evaluate(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<EvaluateOptions>();
  CLI::App* cmd =
      app.add_subcommand("evaluate", "Score predicted instances against ground truth");
  cmd->add_option("--pred", opts->pred_dir, "Directory of predicted *_instances.png/.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--gt", opts->gt_dir, "Directory of ground-truth *_instances.png/.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--classes", opts->classes, "Class map JSON for report labels")
      ->check(CLI::ExistingFile);
  cmd->add_option("--gsd", opts->gsd, "Ground sample distance in meters per pixel")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--empty-na", opts->empty_na,
                "Report n/a instead of 100 for rates with no instances on either side");
  CLI::Option* base =
      cmd->add_option("--base-params", opts->params.base, "Frozen base model parameters");
  cmd->add_option("--projection-params", opts->params.projection, "Projection parameters")
      ->needs(base);
  cmd->add_option("--decoder-params", opts->params.decoder, "Decoder parameters")->needs(base);

  cmd->callback([opts, &g, base] {
    const std::filesystem::path out = require_out(g);

    EvalConfig cfg;
    cfg.empty_empty_na = opts->empty_na;
    cfg.gsd = opts->gsd;
    if (base->count() > 0) cfg.params = opts->params;
    if (!opts->classes.empty()) cfg.class_map = read_class_map(opts->classes);

    const std::vector<std::string> scenes = instance_scenes(opts->gt_dir);
    if (scenes.empty()) {
      throw DataError("no *_instances.png found under " + opts->gt_dir.string());
    }
    std::vector<InstanceMap> preds;
    std::vector<InstanceMap> gts;
    preds.reserve(scenes.size());
    gts.reserve(scenes.size());
    for (const std::string& scene : scenes) {
      if (!std::filesystem::exists(opts->pred_dir / (scene + "_instances.png"))) {
        throw DataError("prediction for scene " + scene + " missing under " +
                        opts->pred_dir.string());
      }
      preds.push_back(load_scene(opts->pred_dir, scene));
      gts.push_back(load_scene(opts->gt_dir, scene));
    }
    std::vector<std::pair<const InstanceMap*, const InstanceMap*>> pairs;
    pairs.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) pairs.emplace_back(&preds[i], &gts[i]);

    const EvalReport report = evaluate_many(pairs, cfg);
    write_json_file(out / "report.json", report.to_json(cfg));
    write_text_file(out / "report.csv", report.to_csv(cfg));
    const std::string table = report.to_table(cfg);
    write_text_file(out / "report.txt", table);
    write_json_file(out / "evaluate_manifest.json",
                    {{"command", "evaluate"},
                     {"global", g.echo()},
                     {"pred", opts->pred_dir.string()},
                     {"gt", opts->gt_dir.string()},
                     {"scenes", scenes},
                     {"outputs", {"report.json", "report.csv", "report.txt"}}});
    std::cout << table;
  });

  auto oh = std::make_shared<OverheadOptions>();
  CLI::App* overhead =
      app.add_subcommand("overhead", "Adapter parameter overhead relative to the base model");
  overhead->add_option("--base", oh->params.base, "Frozen base model parameters")->required();
  overhead->add_option("--projection", oh->params.projection, "Projection parameters")
      ->capture_default_str();
  overhead->add_option("--decoder", oh->params.decoder, "Decoder parameters")
      ->capture_default_str();

  overhead->callback([oh, &g] {
    const nlohmann::json result = overhead_json(oh->params);
    std::cout << result.dump() << "\n";
    if (!g.out.empty()) {
      std::filesystem::create_directories(g.out);
      write_json_file(g.out / "overhead.json", result);
    }
  });
}

}  // namespace patchseg::cli
