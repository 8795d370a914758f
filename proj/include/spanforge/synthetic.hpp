#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spanforge/corpus.hpp"

namespace spanforge::synthetic {

// Generator for the cue-word corpus: every question reads
// "what lies between <cue> and <marker> ?" and its answer is the single word
// between the two in "... <cue> <answer> <marker> ...". Hard questions also
// carry decoy triples "<cue> <other> <marker>" placed before the real one.
struct CueCorpusOptions {
  std::size_t questions = 200;
  std::uint64_t seed = 42;
  std::size_t min_words = 40;
  std::size_t max_words = 70;
  // Share of contexts drawn from [long_min_words, long_max_words] instead.
  double long_fraction = 0.0;
  std::size_t long_min_words = 200;
  std::size_t long_max_words = 300;
  // Where the answer triple may start, as fractions of the context length.
  double answer_begin = 0.0;
  double answer_end = 1.0;
  // Share of questions with decoys, and how many each gets.
  double hard_fraction = 0.0;
  int min_decoys = 3;
  int max_decoys = 5;
  // Share of easy questions with one lone "<cue> <word>" near-miss.
  double near_miss_fraction = 0.0;
  // Chance that a filler word becomes the connective "and", which also
  // occurs in every question. Kept at least five tokens from any other
  // question word so it never creates a second candidate answer.
  double connective_rate = 0.0;
};

// English, labeled, one question per context.
Dataset cue_corpus(const CueCorpusOptions& options);

// Every word the generator can emit, sorted.
std::vector<std::string> cue_vocabulary();

// Deterministic word substitution. A `shared_fraction` share of the
// vocabulary maps to itself; the rest maps to invented words.
class Cipher {
 public:
  Cipher(const std::vector<std::string>& vocabulary, double shared_fraction,
         std::uint64_t seed);

  std::string apply(std::string_view text) const;
  // Enciphers every context, question and answer, recomputing answer offsets.
  Dataset apply(const Dataset& data) const;

  const std::map<std::string, std::string>& mapping() const { return mapping_; }
  double shared_fraction() const;

 private:
  std::map<std::string, std::string> mapping_;
};

struct CrossLingualFixture {
  Dataset source;        // labeled source-language training data
  Dataset target_train;  // target-language training questions, no answers
  Dataset target_gold;   // target_train with its answers, for oracles only
  Dataset target_dev;    // labeled target-language evaluation data
};

// Source corpus from `source`, target train and dev corpora from `target`
// (dev with a different seed), target enciphered with 30% shared words.
CrossLingualFixture make_fixture(CueCorpusOptions source, CueCorpusOptions target,
                                 std::size_t questions, std::uint64_t seed);

// Source: answers in the first half of each context. Target: answers in the
// last 30%, 40% of questions with 3-5 decoys before the answer, and frequent
// connectives. Zero-shot transfer carries the source's early-answer bias, so
// it misses every decoyed question; confident target predictions teach the
// late-answer bias.
CrossLingualFixture bilingual_cipher_fixture(std::size_t questions = 500,
                                             std::uint64_t seed = 42);

// Variant whose zero-shot pseudo-labels are right above a confidence of about
// 0.7 and mostly wrong below it: 2-decoy questions land just under 0.7, and
// long contexts (where most of the useful signal is) land just over it.
CrossLingualFixture calibrated_noise_fixture(std::size_t questions = 500,
                                             std::uint64_t seed = 7);

}  // namespace spanforge::synthetic
