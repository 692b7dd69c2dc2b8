// Run-level tokenizer bridging mask text and the toy policy's vocabulary.
//
// The vocabulary holds one token per class label, one per run count from 1 to
// max_count, plus the two separators. Detokenizing a label token then a count
// token yields the canonical run text "label *count", so any token sequence
// detokenizes to a string the robust decoder can consume.

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchseg/mask.hpp"

namespace patchseg {

class RrleTokenizer {
 public:
  RrleTokenizer(const ClassMap& cm, int max_count);

  int vocab_size() const { return static_cast<int>(fragments_.size()); }
  int max_count() const { return max_count_; }

  // Token id -> text fragment ("fields", " *7", "|", "\n").
  const std::string& fragment(int token) const;

  // Tokenizes canonical codec output. Throws DataError on text outside the
  // vocabulary (unknown label, count above max_count, malformed run).
  std::vector<int> tokenize(std::string_view text) const;

  // Fragment concatenation; never fails.
  std::string detokenize(std::span<const int> tokens) const;

 private:
  int label_token(std::string_view label) const;  // -1 when absent

  std::vector<std::string> fragments_;
  int max_count_ = 0;
  int first_count_token_ = 0;  // token id of " *1"
  int pipe_token_ = 0;
  int newline_token_ = 0;
};

}  // namespace patchseg
