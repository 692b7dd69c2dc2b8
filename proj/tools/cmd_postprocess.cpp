// postprocess: semantic mask -> watershed instances with a class table.

#include <memory>
#include <string>

#include "patchseg/errors.hpp"
#include "patchseg/io.hpp"
#include "patchseg/mask.hpp"
#include "patchseg/postprocess.hpp"

#include "common.hpp"

namespace patchseg::cli {

namespace {

struct PostprocessOptions {
  std::filesystem::path semantic;
  std::filesystem::path boundaries;
  std::filesystem::path classes;
  double threshold = 0.5;
};

}  // namespace

void register_postprocess(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<PostprocessOptions>();
  CLI::App* cmd =
      app.add_subcommand("postprocess", "Split a semantic mask into instances by watershed");
  cmd->add_option("--semantic", opts->semantic, "Predicted semantic mask PNG")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--boundaries", opts->boundaries,
                  "Boundary-strength raster (.pfm or PNG); class transitions when omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--classes", opts->classes, "Class map JSON (sets the background id)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--threshold", opts->threshold, "Marker threshold in (0, 1]")
      ->capture_default_str();

  cmd->callback([opts, &g] {
    const std::filesystem::path out = require_out(g);
    const SemanticMask mask = read_mask_png(opts->semantic);

    ClassId background = 0;
    if (!opts->classes.empty()) {
      const ClassMap cm = read_class_map(opts->classes);
      validate_mask(mask, cm);
      background = cm.background_id();
    }

    BoundaryMap boundaries = opts->boundaries.empty() ? extract_boundaries(mask)
                                                      : read_boundary(opts->boundaries);
    if (boundaries.height() != mask.height() || boundaries.width() != mask.width()) {
      throw DataError("boundary raster is " + std::to_string(boundaries.height()) + "x" +
                      std::to_string(boundaries.width()) + " but the mask is " +
                      std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
    }

    const InstanceMap instances =
        watershed_instances(mask, boundaries, opts->threshold, background);

    const std::string scene = scene_base_name(opts->semantic);
    const std::filesystem::path png = out / (scene + "_instances.png");
    const std::filesystem::path table = out / (scene + "_instances.json");
    write_instance_map(png, table, instances);

    write_json_file(out / (scene + ".postprocess.json"),
                    {{"command", "postprocess"},
                     {"global", g.echo()},
                     {"semantic", opts->semantic.string()},
                     {"boundaries",
                      opts->boundaries.empty() ? "class-transitions" : opts->boundaries.string()},
                     {"threshold", opts->threshold},
                     {"background_id", background},
                     {"instances", instances.classes.size()},
                     {"outputs", {png.string(), table.string()}}});
  });
}

}  // namespace patchseg::cli
