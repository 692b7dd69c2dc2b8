// synth: write a synthetic ground-truth corpus (semantic + instance maps).

#include <cstdio>
#include <memory>
#include <string>

#include "patchseg/io.hpp"
#include "patchseg/synth.hpp"

#include "common.hpp"

namespace patchseg::cli {

namespace {

std::string scene_name(std::uint64_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "scene_%04llu", static_cast<unsigned long long>(index));
  return buf;
}

}  // namespace

void register_synth(CLI::App& app, GlobalOptions& g) {
  auto cfg = std::make_shared<SynthConfig>();
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic ground-truth corpus");
  synth->add_option("--scenes", cfg->scenes, "Number of scenes")->capture_default_str();
  synth->add_option("--height", cfg->height, "Scene height in pixels")->capture_default_str();
  synth->add_option("--width", cfg->width, "Scene width in pixels")->capture_default_str();
  synth->add_option("--min-instances", cfg->min_instances, "Fewest instances per scene")
      ->capture_default_str();
  synth->add_option("--max-instances", cfg->max_instances, "Most instances per scene")
      ->capture_default_str();
  synth->callback([cfg, &g] {
    const std::filesystem::path out = require_out(g);
    cfg->seed = g.seed;
    cfg->validate();
    const ClassMap cm = cfg->class_map();
    write_class_map(out / "classes.json", cm);

    nlohmann::json scenes = nlohmann::json::array();
    for (std::uint64_t index = 0; index < static_cast<std::uint64_t>(cfg->scenes); ++index) {
      const Scene scene = generate_scene(*cfg, index);
      const std::string name = scene_name(index);
      write_mask_png(out / (name + "_semantic.png"), scene.semantic);
      write_instance_map(out / (name + "_instances.png"), out / (name + "_instances.json"),
                         scene.instances);
      scenes.push_back({{"name", name}, {"instances", scene.instances.classes.size()}});
    }

    write_json_file(out / "synth_manifest.json",
                    {{"command", "synth"},
                     {"global", g.echo()},
                     {"config",
                      {{"scenes", cfg->scenes},
                       {"height", cfg->height},
                       {"width", cfg->width},
                       {"min_instances", cfg->min_instances},
                       {"max_instances", cfg->max_instances},
                       {"class_labels", cfg->class_labels},
                       {"seed", cfg->seed}}},
                     {"classes", "classes.json"},
                     {"scenes", std::move(scenes)}});
  });
}

}  // namespace patchseg::cli
