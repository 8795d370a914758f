#include "spanforge/text.hpp"

#include <array>

#include "spanforge/error.hpp"
#include "spanforge/utf8.hpp"

namespace spanforge {
namespace {

void push_token(TokenizedText& out, std::u32string_view text, std::size_t begin,
                std::size_t end) {
  out.tokens.push_back(utf8::encode(text.substr(begin, end - begin)));
  out.offsets.push_back({begin, end});
}

// Whitespace-separated chunks as [begin, end) pairs.
template <typename Fn>
void for_each_chunk(std::u32string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && utf8::is_space(text[i])) ++i;
    if (i == text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !utf8::is_space(text[j])) ++j;
    fn(i, j);
    i = j;
  }
}

constexpr std::array<std::u32string_view, 3> kEnglishArticles = {U"a", U"an",
                                                                  U"the"};
constexpr std::array<std::u32string_view, 8> kFrenchArticles = {
    U"le", U"la", U"les", U"un", U"une", U"des", U"du", U"de"};

bool is_article(std::u32string_view word, Language lang) {
  if (lang == Language::En) {
    for (auto a : kEnglishArticles) {
      if (word == a) return true;
    }
  } else if (lang == Language::Fr) {
    for (auto a : kFrenchArticles) {
      if (word == a) return true;
    }
  }
  return false;
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }

}  // namespace

Language parse_language(std::string_view code) {
  if (code == "en") return Language::En;
  if (code == "fr") return Language::Fr;
  if (code == "zh") return Language::Zh;
  if (code == "ko") return Language::Ko;
  throw ValidationError("unsupported language code '" + std::string(code) +
                        "' (expected en, fr, zh or ko)");
}

std::string_view language_code(Language lang) {
  switch (lang) {
    case Language::En: return "en";
    case Language::Fr: return "fr";
    case Language::Zh: return "zh";
    case Language::Ko: return "ko";
  }
  return "en";
}

LanguageClass language_class(Language lang) {
  return lang == Language::Zh ? LanguageClass::CJK
                              : LanguageClass::SpaceDelimited;
}

TokenizedText tokenize(std::string_view text, Language lang) {
  const auto chars = utf8::decode(text);
  return tokenize(std::u32string_view(chars), lang);
}

TokenizedText tokenize(std::u32string_view text, Language lang) {
  if (language_class(lang) == LanguageClass::CJK) {
    auto out = tokenize_characters(text);
    out.language_class = LanguageClass::CJK;
    return out;
  }
  TokenizedText out;
  out.language_class = LanguageClass::SpaceDelimited;
  for_each_chunk(text, [&](std::size_t begin, std::size_t end) {
    std::size_t lead = begin;
    while (lead < end && utf8::is_punct(text[lead])) ++lead;
    std::size_t trail = end;
    while (trail > lead && utf8::is_punct(text[trail - 1])) --trail;
    for (std::size_t k = begin; k < lead; ++k) push_token(out, text, k, k + 1);
    if (lead < trail) push_token(out, text, lead, trail);
    for (std::size_t k = trail; k < end; ++k) push_token(out, text, k, k + 1);
  });
  return out;
}

TokenizedText tokenize_characters(std::u32string_view text) {
  TokenizedText out;
  out.language_class = LanguageClass::CJK;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!utf8::is_space(text[i])) push_token(out, text, i, i + 1);
  }
  return out;
}

std::string normalize_answer(std::string_view text, Language lang) {
  const auto lowered = utf8::to_lower(utf8::decode(text));

  // French elided article: l'avion -> avion.
  std::u32string stripped;
  stripped.reserve(lowered.size());
  for (std::size_t i = 0; i < lowered.size(); ++i) {
    const bool word_start = i == 0 || utf8::is_space(lowered[i - 1]);
    if (lang == Language::Fr && word_start && lowered[i] == U'l' &&
        i + 1 < lowered.size() && is_apostrophe(lowered[i + 1])) {
      ++i;
      continue;
    }
    if (!utf8::is_punct(lowered[i])) stripped.push_back(lowered[i]);
  }

  std::string out;
  const std::u32string_view view(stripped);
  for_each_chunk(view, [&](std::size_t begin, std::size_t end) {
    const auto word = view.substr(begin, end - begin);
    if (is_article(word, lang)) return;
    if (!out.empty()) out.push_back(' ');
    out += utf8::encode(word);
  });
  return out;
}

}  // namespace spanforge
