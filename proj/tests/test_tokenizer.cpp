#include <doctest.h>

#include <string>
#include <vector>

#include "patchseg/errors.hpp"
#include "patchseg/rng.hpp"
#include "patchseg/rrle.hpp"
#include "patchseg/tokenizer.hpp"
#include "support/oracles.hpp"

using namespace patchseg;

namespace {
const ClassMap kLandUse = ClassMap::from_labels({"background", "fields", "trees"});
}

TEST_CASE("vocabulary holds labels, count fragments, and separators") {
  const RrleTokenizer tok(kLandUse, 4);
  CHECK(tok.vocab_size() == 3 + 4 + 2);
  CHECK(tok.fragment(0) == "background");
  CHECK(tok.fragment(2) == "trees");
  CHECK(tok.fragment(3) == " *1");
  CHECK(tok.fragment(6) == " *4");
  CHECK(tok.fragment(7) == "|");
  CHECK(tok.fragment(8) == "\n");
  CHECK_THROWS_AS(tok.fragment(9), DataError);
  CHECK_THROWS_AS(tok.fragment(-1), DataError);
  CHECK_THROWS_AS(RrleTokenizer(kLandUse, 0), DataError);
}

TEST_CASE("tokenize and detokenize invert each other on canonical text") {
  const RrleTokenizer tok(kLandUse, 16);
  const std::string text = "fields *2|background *1\ntrees *3";
  const std::vector<int> tokens = tok.tokenize(text);
  CHECK(tokens == std::vector<int>{1, 3 + 1, 16 + 3, 0, 3 + 0, 16 + 4, 2, 3 + 2});
  CHECK(tok.detokenize(tokens) == text);
}

TEST_CASE("tokenize round-trips every canonical encoding it can express") {
  Rng rng(5);
  const RrleTokenizer tok(kLandUse, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const SemanticMask mask =
        testsupport::random_mask(rng, uniform_int(rng, 1, 6), uniform_int(rng, 1, 12), kLandUse);
    const std::string text = encode_rrle(mask, kLandUse);
    CHECK(tok.detokenize(tok.tokenize(text)) == text);
  }
}

TEST_CASE("tokenize rejects text outside the vocabulary") {
  const RrleTokenizer tok(kLandUse, 4);
  CHECK_THROWS_AS(tok.tokenize("swamp *2"), DataError);
  CHECK_THROWS_AS(tok.tokenize("fields *5"), DataError);   // count above maximum
  CHECK_THROWS_AS(tok.tokenize("fields *0"), DataError);
  CHECK_THROWS_AS(tok.tokenize("fields"), DataError);      // no count fragment
  CHECK_THROWS_AS(tok.tokenize("fields *"), DataError);
  CHECK_THROWS_AS(tok.tokenize("fields*2"), DataError);    // missing canonical space
}

TEST_CASE("any token sequence detokenizes into decodable text") {
  Rng rng(6);
  const RrleTokenizer tok(kLandUse, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> tokens(uniform_below(rng, 40));
    for (int& t : tokens) t = static_cast<int>(uniform_below(rng, tok.vocab_size()));
    const std::string text = tok.detokenize(tokens);
    const DecodeReport report = decode_rrle(text, kLandUse, 4, 4);
    CHECK(report.mask.height() == 4);
    CHECK(report.mask.width() == 4);
  }
}
