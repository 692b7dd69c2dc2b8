// patchseg: batch command-line surface over the segmentation toolkit.

#include <cstdio>
#include <exception>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "patchseg/errors.hpp"
#include "patchseg/io.hpp"

#include "common.hpp"

namespace patchseg::cli {

std::filesystem::path require_out(const GlobalOptions& g) {
  if (g.out.empty()) throw DataError("this command writes artifacts; pass --out <directory>");
  std::filesystem::create_directories(g.out);
  return g.out;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

void warn(const std::string& message) {
  const nlohmann::json line{{"warning", message}};
  std::fprintf(stderr, "%s\n", line.dump().c_str());
}

std::string scene_base_name(const std::filesystem::path& input) {
  std::string stem = input.stem().string();
  for (const std::string suffix : {"_semantic", "_instances"}) {
    if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
      return stem.substr(0, stem.size() - suffix.size());
    }
  }
  return stem;
}

namespace {

void flatten_json(const nlohmann::json& node, std::vector<std::string> parents,
                  std::vector<CLI::ConfigItem>& items) {
  for (const auto& [key, value] : node.items()) {
    if (value.is_object()) {
      std::vector<std::string> deeper = parents;
      deeper.push_back(key);
      flatten_json(value, std::move(deeper), items);
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& element : value) {
        item.inputs.push_back(element.is_string() ? element.get<std::string>() : element.dump());
      }
    } else if (value.is_string()) {
      item.inputs.push_back(value.get<std::string>());
    } else {
      item.inputs.push_back(value.dump());  // numbers and booleans print verbatim
    }
    items.push_back(std::move(item));
  }
}

}  // namespace

std::vector<CLI::ConfigItem> SniffingConfig::from_config(std::istream& input) const {
  std::stringstream buffer;
  buffer << input.rdbuf();
  const std::string text = buffer.str();
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten_json(parsed, {}, items);
    return items;
  }
  std::istringstream as_toml(text);
  return CLI::ConfigTOML::from_config(as_toml);
}

}  // namespace patchseg::cli

int main(int argc, char** argv) {
  using namespace patchseg;
  using namespace patchseg::cli;

  CLI::App app{"Patch-based text-mask segmentation toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or JSON config file; flags override it");
  app.config_formatter(std::make_shared<SniffingConfig>());

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Root seed for every random choice")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Directory receiving all artifacts and manifests");
  app.add_flag("--strict", g.strict, "Turn partial failures into a data-error exit");

  register_codec(app, g);
  register_dataset(app, g);
  register_infer(app, g);
  register_postprocess(app, g);
  register_evaluate(app, g);
  register_grpo(app, g);
  register_synth(app, g);

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  const auto fail = [](const char* type, const std::string& message, int code) {
    const nlohmann::json line{{"error", message}, {"type", type}};
    std::fprintf(stderr, "%s\n", line.dump().c_str());
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    return fail("usage", e.what(), 1);
  } catch (const EndpointError& e) {
    return fail("endpoint", e.what(), 3);
  } catch (const DataError& e) {
    return fail("data", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 2);
  }
  return 0;
}
