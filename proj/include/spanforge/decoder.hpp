#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanforge/corpus.hpp"
#include "spanforge/reader.hpp"

namespace spanforge {

struct DecodeConfig {
  int beam_size = 20;
  int max_answer_tokens = 30;

  // Throws ValidationError.
  void validate() const;

  friend bool operator==(const DecodeConfig&, const DecodeConfig&) = default;
};

void to_json(nlohmann::json& j, const DecodeConfig& c);
void from_json(const nlohmann::json& j, DecodeConfig& c);

// Token indices are global: positions in the context's full tokenization,
// not in the window the span was found in.
struct SpanCandidate {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  CharSpan char_span;
  std::string text;
  double confidence = 0.0;  // start prob + end prob, in [0, 2]

  friend bool operator==(const SpanCandidate&, const SpanCandidate&) = default;
};

// Beam search over each window's top-`beam_size` start and end positions.
// Pairs with end < start or longer than max_answer_tokens are dropped, the
// remainder scored by start_probs[s] + end_probs[e]. Duplicate character
// spans across windows keep their best score. Output is sorted by confidence
// descending, then start_token, then end_token, and holds at most beam_size
// candidates.
std::vector<SpanCandidate> decode(const SpanDistributions& dists, const Context& context,
                                  const DecodeConfig& config);

// Highest-ranked candidate of a decode() result.
std::optional<SpanCandidate> best_answer(std::span<const SpanCandidate> candidates);

}  // namespace spanforge
