// Patch-based instruction dataset construction and the SFT objective.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchseg/mask.hpp"
#include "patchseg/policy.hpp"
#include "patchseg/rng.hpp"
#include "patchseg/tokenizer.hpp"

namespace patchseg {

// Hyperparameters exported for external fine-tuning jobs. Nothing in this
// toolkit consumes them; they ride along in the dataset manifest.
struct SftExportDefaults {
  int lora_rank = 8;
  int lora_alpha = 16;
  double learning_rate = 2e-4;
  int epochs = 20;
  int batch_size = 8;
  int grad_accumulation = 4;
};

struct CorpusConfig {
  int patch_height = 32;
  int patch_width = 32;
  int patches_per_image = 16;
  std::uint64_t seed = 0;
  std::string instruction_template =
      "Segment the {h}x{w} patch at row {top}, column {left} of the provided image; "
      "answer only with the run-length mask.";
  SftExportDefaults sft;

  void validate() const;  // throws DataError
};

struct InstructionSample {
  std::string image_ref;
  PatchSpec patch;
  std::string instruction;
  std::string target_rrle;
  std::string class_map_ref;
};

// One source image of the corpus: a semantic mask, or an instance map that
// gets flattened to one.
struct CorpusEntry {
  std::string image_ref;                          // opaque reference recorded in samples
  std::filesystem::path mask_path;                // semantic or instance id PNG
  std::optional<std::filesystem::path> instance_table_path;  // set for instance maps
};

struct DatasetBuildResult {
  std::size_t samples_written = 0;
  nlohmann::json manifest;
};

// Uniform patch placement over all valid 0-based positions; both borders are
// reachable. Throws DataError when the patch exceeds the image.
PatchSpec sample_patch_spec(Rng& rng, int image_height, int image_width, int patch_height,
                            int patch_width);

// Fills the template's {top} {left} {h} {w} placeholders.
std::string render_instruction(const std::string& tmpl, const PatchSpec& patch);

InstructionSample build_instruction_sample(const SemanticMask& mask, const std::string& image_ref,
                                           const PatchSpec& patch, const ClassMap& cm,
                                           const CorpusConfig& cfg,
                                           const std::string& class_map_ref);

// Writes one JSON object per line:
//   {"image":..., "top":..., "left":..., "h":..., "w":..., "instruction":..., "target":...}
// Image i draws its patches from a stream seeded with cfg.seed xor i, so the
// file is byte-for-byte reproducible for a seed and any job count. Per-image
// failures are recorded in the manifest and skipped; only a corpus with no
// usable image at all throws.
DatasetBuildResult build_dataset(std::span<const CorpusEntry> corpus, const ClassMap& cm,
                                 const std::string& class_map_ref, const CorpusConfig& cfg,
                                 const std::filesystem::path& out_jsonl, int jobs);

// Negative log-likelihood of the sample's target tokens under the policy,
// conditioned on the sample's context. Throws DataError when the target does
// not tokenize into the policy's vocabulary.
double sft_nll(const ToyPolicy& policy, const RrleTokenizer& tokenizer,
               const InstructionSample& sample);

// Analytic gradient of sft_nll; accumulates into grad.
void sft_nll_grad(const ToyPolicy& policy, const RrleTokenizer& tokenizer,
                  const InstructionSample& sample, std::span<double> grad);

// Conditioning key shared by sft_nll and rollout scoring.
PolicyContext sample_context(const InstructionSample& sample);

}  // namespace patchseg
