#include "patchseg/dataset.hpp"

#include <sstream>

#include "patchseg/errors.hpp"
#include "patchseg/io.hpp"
#include "patchseg/parallel.hpp"
#include "patchseg/rrle.hpp"

namespace patchseg {

namespace {

using json = nlohmann::json;

void replace_all(std::string& s, std::string_view needle, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    s.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

}  // namespace

void CorpusConfig::validate() const {
  if (patch_height <= 0 || patch_width <= 0) throw DataError("patch dimensions must be positive");
  if (patches_per_image <= 0) throw DataError("patches_per_image must be positive");
  if (instruction_template.empty()) throw DataError("instruction template must not be empty");
}

PatchSpec sample_patch_spec(Rng& rng, int image_height, int image_width, int patch_height,
                            int patch_width) {
  if (patch_height <= 0 || patch_width <= 0) throw DataError("patch dimensions must be positive");
  if (patch_height > image_height || patch_width > image_width) {
    throw DataError("patch " + std::to_string(patch_height) + "x" + std::to_string(patch_width) +
                    " exceeds image " + std::to_string(image_height) + "x" +
                    std::to_string(image_width));
  }
  PatchSpec p;
  p.height = patch_height;
  p.width = patch_width;
  p.top = uniform_int(rng, 0, image_height - patch_height);
  p.left = uniform_int(rng, 0, image_width - patch_width);
  return p;
}

std::string render_instruction(const std::string& tmpl, const PatchSpec& patch) {
  std::string out = tmpl;
  replace_all(out, "{top}", std::to_string(patch.top));
  replace_all(out, "{left}", std::to_string(patch.left));
  replace_all(out, "{h}", std::to_string(patch.height));
  replace_all(out, "{w}", std::to_string(patch.width));
  return out;
}

InstructionSample build_instruction_sample(const SemanticMask& mask, const std::string& image_ref,
                                           const PatchSpec& patch, const ClassMap& cm,
                                           const CorpusConfig& cfg,
                                           const std::string& class_map_ref) {
  InstructionSample sample;
  sample.image_ref = image_ref;
  sample.patch = patch;
  sample.instruction = render_instruction(cfg.instruction_template, patch);
  sample.target_rrle = encode_rrle(crop(mask, patch), cm);
  sample.class_map_ref = class_map_ref;
  return sample;
}

DatasetBuildResult build_dataset(std::span<const CorpusEntry> corpus, const ClassMap& cm,
                                 const std::string& class_map_ref, const CorpusConfig& cfg,
                                 const std::filesystem::path& out_jsonl, int jobs) {
  cfg.validate();
  if (corpus.empty()) throw DataError("corpus is empty");

  struct ImageResult {
    std::string lines;
    std::string error;
  };
  std::vector<ImageResult> results(corpus.size());

  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const CorpusEntry& entry = corpus[i];
    try {
      SemanticMask mask;
      if (entry.instance_table_path) {
        const InstanceMap im = read_instance_map(entry.mask_path, *entry.instance_table_path);
        mask = instance_to_semantic(im, cm);
      } else {
        mask = read_mask_png(entry.mask_path);
        validate_mask(mask, cm);
      }
      Rng rng(splitmix64(cfg.seed ^ static_cast<std::uint64_t>(i)));
      std::string lines;
      for (int k = 0; k < cfg.patches_per_image; ++k) {
        const PatchSpec patch =
            sample_patch_spec(rng, mask.height(), mask.width(), cfg.patch_height, cfg.patch_width);
        const InstructionSample sample =
            build_instruction_sample(mask, entry.image_ref, patch, cm, cfg, class_map_ref);
        const json line{{"image", sample.image_ref}, {"top", patch.top},
                        {"left", patch.left},       {"h", patch.height},
                        {"w", patch.width},         {"instruction", sample.instruction},
                        {"target", sample.target_rrle}};
        lines += line.dump();
        lines += '\n';
      }
      results[i].lines = std::move(lines);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  });

  std::string body;
  json errors = json::array();
  std::size_t written = 0;
  std::size_t failed_images = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!results[i].error.empty()) {
      ++failed_images;
      errors.push_back({{"image", corpus[i].image_ref}, {"error", results[i].error}});
      continue;
    }
    body += results[i].lines;
    written += static_cast<std::size_t>(cfg.patches_per_image);
  }
  if (failed_images == corpus.size()) {
    throw DataError("every corpus image failed; first error: " +
                    errors.at(0).at("error").get<std::string>());
  }
  write_text_file(out_jsonl, body);

  DatasetBuildResult result;
  result.samples_written = written;
  result.manifest = json{{"images", corpus.size()},
                         {"failed_images", failed_images},
                         {"samples_written", written},
                         {"patches_per_image", cfg.patches_per_image},
                         {"patch_height", cfg.patch_height},
                         {"patch_width", cfg.patch_width},
                         {"seed", cfg.seed},
                         {"instruction_template", cfg.instruction_template},
                         {"class_map", class_map_ref},
                         {"errors", std::move(errors)},
                         {"sft_export",
                          {{"lora_rank", cfg.sft.lora_rank},
                           {"lora_alpha", cfg.sft.lora_alpha},
                           {"learning_rate", cfg.sft.learning_rate},
                           {"epochs", cfg.sft.epochs},
                           {"batch_size", cfg.sft.batch_size},
                           {"grad_accumulation", cfg.sft.grad_accumulation}}}};
  return result;
}

PolicyContext sample_context(const InstructionSample& sample) {
  return PolicyContext{sample.image_ref + "\x1f" + sample.instruction};
}

double sft_nll(const ToyPolicy& policy, const RrleTokenizer& tokenizer,
               const InstructionSample& sample) {
  const std::vector<int> tokens = tokenizer.tokenize(sample.target_rrle);
  if (tokenizer.vocab_size() != policy.vocab_size()) {
    throw DataError("tokenizer and policy vocabularies differ");
  }
  const std::vector<double> lp = policy.logprobs(sample_context(sample), tokens);
  double nll = 0;
  for (double v : lp) nll -= v;
  return nll;
}

void sft_nll_grad(const ToyPolicy& policy, const RrleTokenizer& tokenizer,
                  const InstructionSample& sample, std::span<double> grad) {
  const std::vector<int> tokens = tokenizer.tokenize(sample.target_rrle);
  if (tokenizer.vocab_size() != policy.vocab_size()) {
    throw DataError("tokenizer and policy vocabularies differ");
  }
  policy.add_logprob_grad(sample_context(sample), tokens, -1.0, grad);
}

}  // namespace patchseg
