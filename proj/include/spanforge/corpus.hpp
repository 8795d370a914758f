#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spanforge/text.hpp"

namespace spanforge {

struct Context {
  std::string id;
  std::string text;
  std::string title;  // optional metadata, may be empty

  friend bool operator==(const Context&, const Context&) = default;
};

struct Question {
  std::string id;
  std::string context_id;
  std::string text;

  friend bool operator==(const Question&, const Question&) = default;
};

// char_start counts Unicode scalar values, like SQuAD's answer_start.
struct AnswerSpan {
  std::string text;
  std::size_t char_start = 0;

  friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

using AnswerMap = std::map<std::string, std::vector<AnswerSpan>>;

// Immutable reading-comprehension corpus. Construction validates every
// invariant (unique ids, resolvable references, answer spans matching their
// context) and throws ValidationError on the first violation.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Context> contexts, std::vector<Question> questions,
          std::optional<AnswerMap> answers, Language language);

  const std::vector<Context>& contexts() const { return contexts_; }
  const std::vector<Question>& questions() const { return questions_; }
  const std::optional<AnswerMap>& answers() const { return answers_; }
  Language language() const { return language_; }

  // Answers present and every question has at least one.
  bool labeled() const;
  bool empty() const { return questions_.empty(); }

  const Context* find_context(std::string_view id) const;
  const Question* find_question(std::string_view id) const;
  // Throws ValidationError when the question is unknown.
  const Context& context_of(const Question& q) const;
  std::span<const AnswerSpan> answers_for(std::string_view question_id) const;

  // Copy with gold answers removed.
  Dataset without_answers() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.language_ == b.language_ && a.contexts_ == b.contexts_ &&
           a.questions_ == b.questions_ && a.answers_ == b.answers_;
  }

 private:
  std::vector<Context> contexts_;
  std::vector<Question> questions_;
  std::optional<AnswerMap> answers_;
  Language language_ = Language::En;
  std::unordered_map<std::string, std::size_t> context_index_;
  std::unordered_map<std::string, std::size_t> question_index_;
};

// Throws ValidationError unless context_text[char_start, +len(text)) == text.
void check_answer_span(const AnswerSpan& answer, std::u32string_view context_text,
                       std::string_view question_id);

Dataset parse_squad_json(std::string_view json, bool expect_labels,
                         Language language,
                         std::string_view source_name = "<memory>");
Dataset load_squad_json(const std::filesystem::path& path, bool expect_labels,
                        Language language);

std::string to_squad_json(const Dataset& dataset);
void save_squad_json(const Dataset& dataset, const std::filesystem::path& path);

// Whole-file helpers shared by every module that persists artifacts.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace spanforge
