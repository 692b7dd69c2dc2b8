#include "patchseg/rrle.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <string>

#include "patchseg/errors.hpp"

namespace patchseg {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Whole-token integer parse; returns false on any stray character.
bool parse_count(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::string encode_rrle(const SemanticMask& mask, const ClassMap& cm) {
  if (mask.empty()) throw DataError("cannot encode an empty mask");
  std::string out;
  for (int r = 0; r < mask.height(); ++r) {
    if (r > 0) out += '\n';
    int c = 0;
    while (c < mask.width()) {
      const ClassId id = mask(r, c);
      int run = 1;
      while (c + run < mask.width() && mask(r, c + run) == id) ++run;
      if (c > 0) out += '|';
      out += cm.label_of(id);
      out += " *";
      out += std::to_string(run);
      c += run;
    }
  }
  return out;
}

DecodeReport decode_rrle(std::string_view text, const ClassMap& cm, int height, int width) {
  if (height <= 0 || width <= 0) {
    throw DataError("decode dimensions must be positive, got " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
  DecodeReport report;
  report.mask = SemanticMask(height, width, cm.background_id());
  auto& flat = report.mask.data();
  const std::int64_t total = static_cast<std::int64_t>(flat.size());
  std::int64_t p = 0;

  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    const std::size_t line_end = std::min(text.find('\n', line_start), text.size());
    const std::string_view line = text.substr(line_start, line_end - line_start);

    if (trim(line).empty()) {
      // Blank line: skip one full row's worth of pixels without writing.
      p += width;
    } else {
      std::size_t run_start = 0;
      while (run_start <= line.size()) {
        const std::size_t run_end = std::min(line.find('|', run_start), line.size());
        const std::string_view token = line.substr(run_start, run_end - run_start);

        const std::size_t star = token.rfind('*');
        std::int64_t count = 0;
        if (star == std::string_view::npos || !parse_count(trim(token.substr(star + 1)), count) ||
            count <= 0) {
          ++report.invalid_runs;
        } else {
          ClassId value = cm.background_id();
          if (auto id = cm.id_of(trim(token.substr(0, star)))) {
            value = *id;
          } else {
            ++report.unknown_labels;
          }
          if (p + count > total) {
            // Pixel-budget clamp. When blank-line skips pushed p past the
            // end this yields a non-positive count that only pulls p back.
            count = total - p;
            ++report.truncated_runs;
          }
          for (std::int64_t i = 0; i < count; ++i) flat[static_cast<std::size_t>(p + i)] = value;
          p += count;
        }

        if (run_end == line.size()) break;
        run_start = run_end + 1;
      }
    }

    if (line_end == text.size()) break;
    line_start = line_end + 1;
  }

  if (p < total) report.underfilled_pixels = static_cast<int>(total - p);
  return report;
}

}  // namespace patchseg
