// encode / decode: mask PNG <-> run-length text.

#include <memory>
#include <string>

#include "patchseg/errors.hpp"
#include "patchseg/io.hpp"
#include "patchseg/mask.hpp"
#include "patchseg/rrle.hpp"

#include "common.hpp"

namespace patchseg::cli {

namespace {

struct EncodeOptions {
  std::filesystem::path mask;
  std::filesystem::path classes;
};

struct DecodeOptions {
  std::filesystem::path text;
  std::filesystem::path classes;
  int height = 0;
  int width = 0;
};

}  // namespace

void register_codec(CLI::App& app, GlobalOptions& g) {
  auto enc = std::make_shared<EncodeOptions>();
  CLI::App* encode = app.add_subcommand("encode", "Encode a mask PNG as run-length text");
  encode->add_option("--mask", enc->mask, "Semantic mask PNG")
      ->required()
      ->check(CLI::ExistingFile);
  encode->add_option("--classes", enc->classes, "Class map JSON")
      ->required()
      ->check(CLI::ExistingFile);
  encode->callback([enc, &g] {
    const std::filesystem::path out = require_out(g);
    const ClassMap cm = read_class_map(enc->classes);
    const SemanticMask mask = read_mask_png(enc->mask);
    validate_mask(mask, cm);

    const std::string base = enc->mask.stem().string();
    const std::filesystem::path text_path = out / (base + ".rrle");
    write_text_file(text_path, encode_rrle(mask, cm));

    write_json_file(out / (base + ".encode.json"),
                    {{"command", "encode"},
                     {"global", g.echo()},
                     {"config", {{"mask", enc->mask.string()}, {"classes", enc->classes.string()}}},
                     {"height", mask.height()},
                     {"width", mask.width()},
                     {"output", text_path.string()}});
  });

  auto dec = std::make_shared<DecodeOptions>();
  CLI::App* decode = app.add_subcommand("decode", "Decode run-length text into a mask PNG");
  decode->add_option("--text", dec->text, "Run-length text file")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--classes", dec->classes, "Class map JSON")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--height", dec->height, "Target mask height")->required();
  decode->add_option("--width", dec->width, "Target mask width")->required();
  decode->callback([dec, &g] {
    const std::filesystem::path out = require_out(g);
    const ClassMap cm = read_class_map(dec->classes);
    const DecodeReport report = decode_rrle(read_text_file(dec->text), cm, dec->height, dec->width);

    const std::string base = dec->text.stem().string();
    const std::filesystem::path mask_path = out / (base + ".png");
    write_mask_png(mask_path, report.mask);

    write_json_file(out / (base + ".decode.json"),
                    {{"command", "decode"},
                     {"global", g.echo()},
                     {"config",
                      {{"text", dec->text.string()},
                       {"classes", dec->classes.string()},
                       {"height", dec->height},
                       {"width", dec->width}}},
                     {"report",
                      {{"truncated_runs", report.truncated_runs},
                       {"unknown_labels", report.unknown_labels},
                       {"invalid_runs", report.invalid_runs},
                       {"underfilled_pixels", report.underfilled_pixels}}},
                     {"output", mask_path.string()}});

    const bool recovered = report.truncated_runs || report.unknown_labels ||
                           report.invalid_runs || report.underfilled_pixels;
    if (recovered && g.strict) {
      throw DataError("decode needed recovery (" + std::to_string(report.truncated_runs) +
                      " truncated, " + std::to_string(report.unknown_labels) + " unknown, " +
                      std::to_string(report.invalid_runs) + " invalid, " +
                      std::to_string(report.underfilled_pixels) + " underfilled)");
    }
    if (recovered) warn("decode recovered from malformed text; see the report");
  });
}

}  // namespace patchseg::cli
