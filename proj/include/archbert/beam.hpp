#pragma once

#include <functional>
#include <vector>

#include "archbert/textkit.hpp"

namespace archbert {

/// Log-probabilities over the whole vocabulary for the token following
/// `prefix` (which starts with [BOS]).
using NextTokenFn = std::function<std::vector<double>(const std::vector<TokenId>& prefix)>;

struct BeamConfig {
  std::size_t beam = 10;
  std::size_t max_len = 32;  // generated tokens, [EOS] included
  std::size_t vocab_size = 0;
  TokenId bos = TextVocab::kBos;
  TokenId eos = TextVocab::kEos;
  std::vector<TokenId> banned = {TextVocab::kPad, TextVocab::kBos, TextVocab::kMask};
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // generated tokens, without [BOS]
  double logprob = 0.0;
  bool done = false;

  double score() const { return tokens.empty() ? 0.0 : logprob / static_cast<double>(tokens.size()); }
};

/// Length-normalized beam search. Finished hypotheses stay in the pool and
/// compete with new expansions; ties go to the lexicographically smaller
/// token sequence. At step max_len only [EOS] may be emitted.
Hypothesis beam_search(const NextTokenFn& next, const BeamConfig& cfg);

/// Highest-scoring hypothesis over every admissible sequence, by
/// enumeration. Exponential; meant for tiny vocabularies in tests.
Hypothesis exhaustive_search(const NextTokenFn& next, const BeamConfig& cfg);

}  // namespace archbert
