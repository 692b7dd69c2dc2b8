// Shared CLI plumbing: global options, manifest writing, config sniffing.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace patchseg::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int jobs = std::max(1u, std::thread::hardware_concurrency());
  std::filesystem::path out;
  bool strict = false;

  nlohmann::json echo() const {
    return {{"seed", seed}, {"jobs", jobs}, {"out", out.string()}, {"strict", strict}};
  }
};

// Throws DataError when --out is missing; creates the directory otherwise.
std::filesystem::path require_out(const GlobalOptions& g);

// Pretty-printed JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

// Single-line machine-parseable warning on stderr.
void warn(const std::string& message);

// Strips a known suffix ("_semantic", "_instances") from a file stem so the
// pipeline stages agree on one scene base name.
std::string scene_base_name(const std::filesystem::path& input);

// TOML by default; a file whose first non-space byte is '{' is read as JSON,
// with top-level objects acting as subcommand sections.
class SniffingConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

void register_codec(CLI::App& app, GlobalOptions& g);
void register_dataset(CLI::App& app, GlobalOptions& g);
void register_infer(CLI::App& app, GlobalOptions& g);
void register_postprocess(CLI::App& app, GlobalOptions& g);
void register_evaluate(CLI::App& app, GlobalOptions& g);
void register_grpo(CLI::App& app, GlobalOptions& g);
void register_synth(CLI::App& app, GlobalOptions& g);

}  // namespace patchseg::cli
