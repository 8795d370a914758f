#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "spanforge/error.hpp"
#include "spanforge/text.hpp"
#include "spanforge/utf8.hpp"

using namespace spanforge;

TEST_SUITE("text") {

TEST_CASE("whitespace split with offsets") {
  const auto t = tokenize("the cat sat", Language::En);
  CHECK(t.tokens == std::vector<std::string>{"the", "cat", "sat"});
  REQUIRE(t.offsets.size() == 3);
  CHECK(t.offsets[0] == CharSpan{0, 3});
  CHECK(t.offsets[1] == CharSpan{4, 7});
  CHECK(t.offsets[2] == CharSpan{8, 11});
  CHECK(t.language_class == LanguageClass::SpaceDelimited);
}

TEST_CASE("leading and trailing punctuation become tokens") {
  CHECK(tokenize("Hello, world", Language::En).tokens ==
        std::vector<std::string>{"Hello", ",", "world"});
  CHECK(tokenize("(hi).", Language::En).tokens ==
        std::vector<std::string>{"(", "hi", ")", "."});
  CHECK(tokenize("U.S.A.", Language::En).tokens ==
        std::vector<std::string>{"U.S.A", "."});
  CHECK(tokenize("« Les Misérables »", Language::Fr).tokens ==
        std::vector<std::string>{"«", "Les", "Misérables", "»"});
}

TEST_CASE("chinese is one token per character") {
  const auto t = tokenize("北京 大学", Language::Zh);
  CHECK(t.tokens == std::vector<std::string>{"北", "京", "大", "学"});
  CHECK(t.offsets[2] == CharSpan{3, 4});
  CHECK(t.language_class == LanguageClass::CJK);
  CHECK(tokenize("北京大学", Language::Zh).size() == 4);
}

TEST_CASE("korean decodes over eojeol") {
  const auto t = tokenize("서울은 한국의 수도이다.", Language::Ko);
  CHECK(t.tokens == std::vector<std::string>{"서울은", "한국의", "수도이다", "."});
  CHECK(tokenize_characters(U"서울 대학").size() == 4);
}

TEST_CASE("empty and blank text give no tokens") {
  CHECK(tokenize("", Language::En).size() == 0);
  CHECK(tokenize(" \t\n ", Language::Fr).size() == 0);
  CHECK(tokenize("　", Language::Zh).size() == 0);
}

TEST_CASE("offsets map back to the source slice") {
  const std::string text = "Où est « la gare » ? Ça va, très bien… 北京!";
  for (auto lang : {Language::En, Language::Fr, Language::Zh, Language::Ko}) {
    const auto t = tokenize(text, lang);
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(utf8::slice(text, t.offsets[i].begin, t.offsets[i].end) == t.tokens[i]);
      CHECK(t.offsets[i].begin >= prev_end);
      CHECK(t.offsets[i].begin < t.offsets[i].end);
      prev_end = t.offsets[i].end;
    }
  }
}

TEST_CASE("tokens of punctuation-free text concatenate to the text minus whitespace") {
  const std::string text = "  alpha beta\tgamma\n delta épée ";
  std::string joined;
  for (const auto& tok : tokenize(text, Language::En).tokens) joined += tok;
  CHECK(joined == "alphabetagammadeltaépée");
}

TEST_CASE("normalization examples") {
  CHECK(normalize_answer("the Paris", Language::En) == "paris");
  CHECK(normalize_answer("北京", Language::Zh) == "北京");
  CHECK(normalize_answer("  La  Seine. ", Language::Fr) == "seine");
  CHECK(normalize_answer("l'avion", Language::Fr) == "avion");
  CHECK(normalize_answer("L’Académie", Language::Fr) == "académie");
  CHECK(normalize_answer("The  Eiffel, Tower!", Language::En) == "eiffel tower");
  CHECK(normalize_answer("la", Language::En) == "la");
  CHECK(normalize_answer("the", Language::Fr) == "the");
  CHECK(normalize_answer("“长江”。", Language::Zh) == "长江");
  CHECK(normalize_answer("A", Language::Ko) == "a");
}

TEST_CASE("normalization is idempotent") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> pieces = {"The", "l'", "La", " ", "  ", ",", "«", "Été",
                                           "an", "北京", "서울", "de", "!", "x", "’"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const auto n = rng() % 8;
    for (std::size_t i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
    for (auto lang : {Language::En, Language::Fr, Language::Zh, Language::Ko}) {
      const auto once = normalize_answer(s, lang);
      CHECK(normalize_answer(once, lang) == once);
    }
  }
}

TEST_CASE("language codes") {
  CHECK(parse_language("fr") == Language::Fr);
  CHECK(language_code(Language::Ko) == "ko");
  CHECK(language_class(Language::Ko) == LanguageClass::SpaceDelimited);
  CHECK(language_class(Language::Zh) == LanguageClass::CJK);
  CHECK_THROWS_AS(parse_language("de"), ValidationError);
  CHECK_THROWS_AS(parse_language("EN"), ValidationError);
}

TEST_CASE("invalid utf-8 is rejected") {
  CHECK_THROWS_AS(tokenize(std::string("ab\xff"), Language::En), FormatError);
  CHECK_THROWS_AS(utf8::decode(std::string("\xe4\xb8")), FormatError);
  CHECK_FALSE(utf8::is_valid(std::string("\xc0\xaf")));
  CHECK(utf8::is_valid("北京"));
}

}  // TEST_SUITE
