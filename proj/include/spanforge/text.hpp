#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace spanforge {

enum class Language { En, Fr, Zh, Ko };

// Accepts ISO 639-1 codes "en", "fr", "zh", "ko"; throws ValidationError
// otherwise.
Language parse_language(std::string_view code);
std::string_view language_code(Language lang);

enum class LanguageClass { SpaceDelimited, CJK };

// Korean decodes over whitespace-delimited eojeol, so it is SpaceDelimited.
LanguageClass language_class(Language lang);

// Half-open range of Unicode scalar indices.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend auto operator<=>(const CharSpan&, const CharSpan&) = default;
};

struct TokenizedText {
  std::vector<std::string> tokens;
  std::vector<CharSpan> offsets;
  LanguageClass language_class = LanguageClass::SpaceDelimited;

  std::size_t size() const { return tokens.size(); }
};

// SpaceDelimited: whitespace split, then leading and trailing punctuation
// peeled off one character per token. CJK: one token per non-space character.
TokenizedText tokenize(std::string_view text, Language lang);
TokenizedText tokenize(std::u32string_view text, Language lang);

// One token per non-whitespace character, regardless of language.
TokenizedText tokenize_characters(std::u32string_view text);

// SQuAD-style answer normalization: lowercase, drop punctuation, drop articles
// (English and French only), collapse whitespace.
std::string normalize_answer(std::string_view text, Language lang);

}  // namespace spanforge
