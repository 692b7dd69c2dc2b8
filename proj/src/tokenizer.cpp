#include "patchseg/tokenizer.hpp"

#include <charconv>

#include "patchseg/errors.hpp"

namespace patchseg {

RrleTokenizer::RrleTokenizer(const ClassMap& cm, int max_count) : max_count_(max_count) {
  if (max_count <= 0) throw DataError("tokenizer max_count must be positive");
  for (const auto& e : cm.entries()) fragments_.push_back(e.label);
  first_count_token_ = static_cast<int>(fragments_.size());
  for (int c = 1; c <= max_count; ++c) fragments_.push_back(" *" + std::to_string(c));
  pipe_token_ = static_cast<int>(fragments_.size());
  fragments_.emplace_back("|");
  newline_token_ = static_cast<int>(fragments_.size());
  fragments_.emplace_back("\n");
}

const std::string& RrleTokenizer::fragment(int token) const {
  if (token < 0 || token >= vocab_size()) {
    throw DataError("token " + std::to_string(token) + " outside vocabulary of " +
                    std::to_string(vocab_size()));
  }
  return fragments_[static_cast<std::size_t>(token)];
}

int RrleTokenizer::label_token(std::string_view label) const {
  for (int t = 0; t < first_count_token_; ++t) {
    if (fragments_[static_cast<std::size_t>(t)] == label) return t;
  }
  return -1;
}

std::vector<int> RrleTokenizer::tokenize(std::string_view text) const {
  std::vector<int> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '\n') {
      tokens.push_back(newline_token_);
      ++pos;
      continue;
    }
    if (text[pos] == '|') {
      tokens.push_back(pipe_token_);
      ++pos;
      continue;
    }
    // Canonical run: label, then " *count".
    const std::size_t star = text.find(" *", pos);
    if (star == std::string_view::npos) {
      throw DataError("text is not canonical run-length form near offset " + std::to_string(pos));
    }
    const std::string_view label = text.substr(pos, star - pos);
    const int label_tok = label_token(label);
    if (label_tok < 0) throw DataError("label '" + std::string(label) + "' outside vocabulary");

    std::size_t digits_end = star + 2;
    while (digits_end < text.size() && text[digits_end] >= '0' && text[digits_end] <= '9') {
      ++digits_end;
    }
    int count = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + star + 2, text.data() + digits_end, count);
    if (ec != std::errc() || ptr != text.data() + digits_end || count < 1) {
      throw DataError("text is not canonical run-length form near offset " + std::to_string(star));
    }
    if (count > max_count_) {
      throw DataError("run count " + std::to_string(count) + " above vocabulary maximum " +
                      std::to_string(max_count_));
    }
    tokens.push_back(label_tok);
    tokens.push_back(first_count_token_ + count - 1);
    pos = digits_end;
  }
  return tokens;
}

std::string RrleTokenizer::detokenize(std::span<const int> tokens) const {
  std::string out;
  for (int t : tokens) out += fragment(t);
  return out;
}

}  // namespace patchseg
