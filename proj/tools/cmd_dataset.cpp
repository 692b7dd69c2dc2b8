// build-dataset: instruction-sample JSONL from a corpus directory.

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "patchseg/dataset.hpp"
#include "patchseg/errors.hpp"
#include "patchseg/io.hpp"

#include "common.hpp"

namespace patchseg::cli {

namespace {

struct DatasetOptions {
  std::filesystem::path corpus;
  std::filesystem::path classes;  // defaults to <corpus>/classes.json
  CorpusConfig cfg;
};

// A corpus directory holds either *_semantic.png masks or *_instances.png +
// *_instances.json pairs (the synth layout provides both; semantic wins).
std::vector<CorpusEntry> discover_corpus(const std::filesystem::path& dir) {
  std::vector<CorpusEntry> semantic;
  std::vector<CorpusEntry> instances;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::filesystem::path& path = entry.path();
    const std::string stem = path.stem().string();
    if (path.extension() == ".png" && stem.ends_with("_semantic")) {
      semantic.push_back({scene_base_name(path), path, std::nullopt});
    } else if (path.extension() == ".png" && stem.ends_with("_instances")) {
      std::filesystem::path table = path;
      table.replace_extension(".json");
      if (!std::filesystem::exists(table)) {
        throw DataError("instance map " + path.string() + " lacks its class table " +
                        table.string());
      }
      instances.push_back({scene_base_name(path), path, table});
    }
  }
  std::vector<CorpusEntry>& chosen = semantic.empty() ? instances : semantic;
  if (chosen.empty()) {
    throw DataError("no *_semantic.png or *_instances.png images under " + dir.string());
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.image_ref < b.image_ref; });
  return chosen;
}

}  // namespace

void register_dataset(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<DatasetOptions>();
  CLI::App* cmd =
      app.add_subcommand("build-dataset", "Cut patches into an instruction-sample JSONL");
  cmd->add_option("--corpus", opts->corpus, "Directory of ground-truth scenes")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--classes", opts->classes, "Class map JSON (default: <corpus>/classes.json)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--patch-height", opts->cfg.patch_height, "Patch height")
      ->capture_default_str();
  cmd->add_option("--patch-width", opts->cfg.patch_width, "Patch width")->capture_default_str();
  cmd->add_option("--patches-per-image", opts->cfg.patches_per_image, "Samples per image")
      ->capture_default_str();
  cmd->add_option("--instruction", opts->cfg.instruction_template,
                  "Instruction template with {top} {left} {h} {w} slots");
  cmd->callback([opts, &g] {
    const std::filesystem::path out = require_out(g);
    const std::filesystem::path classes_path =
        opts->classes.empty() ? opts->corpus / "classes.json" : opts->classes;
    const ClassMap cm = read_class_map(classes_path);
    opts->cfg.seed = g.seed;
    opts->cfg.validate();

    const std::vector<CorpusEntry> corpus = discover_corpus(opts->corpus);
    const std::filesystem::path jsonl = out / "dataset.jsonl";
    const DatasetBuildResult result =
        build_dataset(corpus, cm, classes_path.string(), opts->cfg, jsonl, g.jobs);

    nlohmann::json manifest = result.manifest;
    manifest["command"] = "build-dataset";
    manifest["global"] = g.echo();
    manifest["corpus"] = opts->corpus.string();
    manifest["output"] = jsonl.string();
    write_json_file(out / "dataset_manifest.json", manifest);

    const auto failures = manifest.value("failed_images", std::size_t{0});
    if (failures > 0) {
      if (g.strict) {
        throw DataError(std::to_string(failures) + " corpus images failed; see the manifest");
      }
      warn(std::to_string(failures) + " corpus images failed; see the manifest");
    }
  });
}

}  // namespace patchseg::cli
