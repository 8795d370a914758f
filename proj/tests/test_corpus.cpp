#include <doctest.h>

#include <string>

#include <json.hpp>

#include "spanforge/corpus.hpp"
#include "spanforge/error.hpp"
#include "support/test_support.hpp"

using namespace spanforge;
using spanforge::testing::TempDir;

namespace {

const char* kMinimal = R"({"version":"1.1","data":[{"title":"t","paragraphs":[
  {"context":"The cat sat on the mat.","qas":[
    {"id":"q1","question":"Where did the cat sit?","answers":[{"text":"the mat","answer_start":15}]}]}]}]})";

Dataset three_questions(Language lang = Language::En) {
  std::vector<Context> contexts = {{"c1", "Alpha beta gamma.", "a"},
                                   {"c2", "Delta epsilon.", "a"}};
  std::vector<Question> questions = {
      {"q1", "c1", "first?"}, {"q2", "c1", "second?"}, {"q3", "c2", "third?"}};
  AnswerMap answers = {{"q1", {{"Alpha", 0}}},
                       {"q2", {{"gamma", 11}, {"beta gamma", 6}}},
                       {"q3", {{"epsilon", 6}}}};
  return Dataset(contexts, questions, answers, lang);
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("minimal labeled file") {
  const auto d = parse_squad_json(kMinimal, true, Language::En);
  CHECK(d.contexts().size() == 1);
  CHECK(d.questions().size() == 1);
  CHECK(d.labeled());
  CHECK(d.answers_for("q1").front().text == "the mat");
  CHECK(d.contexts().front().title == "t");
}

TEST_CASE("empty answers in unlabeled mode") {
  const char* text = R"({"data":[{"paragraphs":[{"context":"abc","qas":[
      {"id":"q1","question":"?","answers":[]},{"id":"q2","question":"?"}]}]}]})";
  const auto d = parse_squad_json(text, false, Language::En);
  CHECK(d.questions().size() == 2);
  CHECK_FALSE(d.labeled());
  CHECK_FALSE(d.answers().has_value());
  CHECK_THROWS_AS(parse_squad_json(text, true, Language::En), MissingLabelError);
}

TEST_CASE("unlabeled mode drops gold answers") {
  const auto d = parse_squad_json(kMinimal, false, Language::En);
  CHECK_FALSE(d.answers().has_value());
  CHECK(d.answers_for("q1").empty());
}

TEST_CASE("answer outside its context names the question") {
  const char* text = R"({"data":[{"paragraphs":[{"context":"0123456789","qas":[
      {"id":"bad-q","question":"?","answers":[{"text":"x","answer_start":500}]}]}]}]})";
  const auto msg = error_of([&] { parse_squad_json(text, true, Language::En); });
  CHECK(msg.find("bad-q") != std::string::npos);
  CHECK_THROWS_AS(parse_squad_json(text, true, Language::En), ValidationError);
  CHECK_THROWS_AS(parse_squad_json(text, false, Language::En), ValidationError);
}

TEST_CASE("answer text must match the context slice") {
  const char* text = R"({"data":[{"paragraphs":[{"context":"hello world","qas":[
      {"id":"q","question":"?","answers":[{"text":"world","answer_start":5}]}]}]}]})";
  CHECK_THROWS_AS(parse_squad_json(text, true, Language::En), ValidationError);
}

TEST_CASE("answer_start counts characters, not bytes") {
  const char* text = R"({"data":[{"paragraphs":[{"context":"中华人民共和国成立于1949年","qas":[
      {"id":"q","question":"何时?","answers":[{"text":"1949年","answer_start":10}]}]}]}]})";
  const auto d = parse_squad_json(text, true, Language::Zh);
  CHECK(d.answers_for("q").front().char_start == 10);
}

TEST_CASE("format errors carry the JSON path") {
  CHECK_THROWS_AS(parse_squad_json("{not json", true, Language::En), FormatError);
  const char* missing = R"({"data":[{"paragraphs":[{"context":"abc","qas":[{"id":"q"}]}]}]})";
  const auto msg = error_of([&] { parse_squad_json(missing, false, Language::En); });
  CHECK(msg.find("$.data[0].paragraphs[0].qas[0]") != std::string::npos);
  const char* extension =
      R"({"data":[{"paragraphs":[{"context":"abc","qas":[{"id":"q","question":"?","is_impossible":true}]}]}]})";
  CHECK_THROWS_AS(parse_squad_json(extension, false, Language::En), FormatError);
  CHECK_THROWS_AS(parse_squad_json(R"({"data":{}})", false, Language::En), FormatError);
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset({{"c", "x", ""}, {"c", "y", ""}}, {}, std::nullopt, Language::En),
                  ValidationError);
  CHECK_THROWS_AS(Dataset({{"c", "x", ""}}, {{"q", "missing", "?"}}, std::nullopt,
                          Language::En),
                  ValidationError);
  CHECK_THROWS_AS(Dataset({{"c", "", ""}}, {}, std::nullopt, Language::En), ValidationError);
  CHECK_THROWS_AS(Dataset({{"c", "x", ""}}, {{"q", "c", "?"}}, AnswerMap{{"other", {{"x", 0}}}},
                          Language::En),
                  ValidationError);
  const Dataset partial({{"c", "x y", ""}}, {{"q1", "c", "?"}, {"q2", "c", "?"}},
                        AnswerMap{{"q1", {{"x", 0}}}}, Language::En);
  CHECK_FALSE(partial.labeled());
}

TEST_CASE("labeled round trip") {
  TempDir dir;
  const auto d = three_questions();
  save_squad_json(d, dir / "d.json");
  CHECK(load_squad_json(dir / "d.json", true, Language::En) == d);
}

TEST_CASE("unlabeled save writes empty answer arrays") {
  TempDir dir;
  const auto d = three_questions().without_answers();
  save_squad_json(d, dir / "u.json");
  const auto j = nlohmann::json::parse(read_file(dir / "u.json"));
  for (const auto& qa : j["data"][0]["paragraphs"][0]["qas"]) {
    CHECK(qa["answers"] == nlohmann::json::array());
  }
  CHECK(load_squad_json(dir / "u.json", false, Language::En) == d);
}

TEST_CASE("CJK text survives a round trip byte for byte") {
  TempDir dir;
  const std::string text = "北京大学是中国的一所大学。서울대학교 «test» 😀";
  const Dataset d({{"c", text, "标题"}}, {{"q", "c", "哪所大学？"}},
                  AnswerMap{{"q", {{"北京大学", 0}, {"😀", 26}}}}, Language::Zh);
  save_squad_json(d, dir / "zh.json");
  const auto back = load_squad_json(dir / "zh.json", true, Language::Zh);
  CHECK(back == d);
  CHECK(back.contexts().front().text == text);
  CHECK(read_file(dir / "zh.json").find(text) != std::string::npos);
}

TEST_CASE("unreadable and unwritable paths are I/O errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_squad_json(dir / "absent.json", true, Language::En), IoError);
  write_file(dir / "file", "x");
  CHECK_THROWS_AS(save_squad_json(three_questions(), dir / "file" / "sub.json"), IoError);
}

TEST_CASE("numeric ids are accepted") {
  const char* text = R"({"data":[{"paragraphs":[{"context":"abc","qas":[
      {"id":7,"question":"?","answers":[{"text":"abc","answer_start":0}]}]}]}]})";
  CHECK(parse_squad_json(text, true, Language::En).find_question("7") != nullptr);
}

}  // TEST_SUITE
