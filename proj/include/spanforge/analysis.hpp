#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spanforge/corpus.hpp"
#include "spanforge/metrics.hpp"
#include "spanforge/reader.hpp"
#include "spanforge/selftrain.hpp"

namespace spanforge {

enum class QuestionType {
  Who,
  What,
  When,
  Where,
  Why,
  Which,
  How,
  HowMany,
  WhatQuoi,
  WhatQue,
  Other
};

// Display label, e.g. "How many", "What (quoi)".
std::string_view question_type_label(QuestionType type);
// Inverse of the identifiers used in keyword files ("HowMany", "WhatQue", ...).
QuestionType parse_question_type(std::string_view name);

// Interrogative keywords per language, in priority order.
class KeywordTable {
 public:
  using Entries = std::vector<std::pair<QuestionType, std::vector<std::string>>>;

  KeywordTable() = default;
  explicit KeywordTable(std::map<Language, Entries> entries) : entries_(std::move(entries)) {}

  // {language: {type: [keywords]}}; object order is priority order.
  static KeywordTable from_json(std::string_view text);
  static KeywordTable load(const std::filesystem::path& path);
  // data/keywords.json shipped with the project.
  static KeywordTable load_default();
  static std::filesystem::path default_path();

  const Entries* entries(Language lang) const;

 private:
  std::map<Language, Entries> entries_;
};

// en: first type in priority order whose keyword occurs as a word anywhere.
// fr: type of the question's first word. zh: first type in priority order
// whose keyword occurs as a substring. ko and unmatched questions: Other.
QuestionType classify_question(const Question& question, Language lang,
                               const KeywordTable& table);

// Answer categories in display order for a language.
const std::vector<std::string>& answer_categories(Language lang);
const std::vector<QuestionType>& question_categories(Language lang);

struct TaggerOutput {
  std::vector<std::string> ner;  // one tag per token, "O" for none
  std::string phrase;            // constituent label covering the answer, e.g. NP
};

// Plug-in point for an external NER/POS/constituency toolkit.
class AnswerTagger {
 public:
  virtual ~AnswerTagger() = default;
  // May throw TransportError; classification then uses the rule fallback.
  virtual TaggerOutput tag(std::string_view text, Language lang) const = 0;
};

struct AnswerType {
  std::string label;
  bool tagger_failed = false;

  friend bool operator==(const AnswerType&, const AnswerType&) = default;
};

AnswerType classify_answer(std::string_view answer, Language lang,
                           const AnswerTagger* tagger = nullptr);

// What the analysis needs from a self-training run: per-question dev scores
// for every iteration, and the pseudo-labels each iteration produced.
struct RunArtifacts {
  struct PseudoItem {
    std::string question_id;
    std::string question;
    std::string answer;
  };
  struct Iteration {
    int iteration = 0;
    std::map<std::string, QuestionScore> per_question;
    std::vector<PseudoItem> pseudo_labels;
  };
  Language language = Language::En;
  std::vector<Iteration> iterations;

  // Reads config.json and iter_0, iter_1, ... under a run directory.
  static RunArtifacts load(const std::filesystem::path& run_dir);
};

struct TypeRow {
  std::string type;
  std::size_t n = 0;
  double zero_shot_f1 = 0.0;
  std::vector<double> iter_f1;  // iterations 1..N
  std::optional<double> delta_f1;  // iteration 1 minus zero-shot
  std::size_t pseudo_label_count = 0;  // in D0
};

struct Breakdown {
  std::string dimension;  // "question" or "answer"
  std::vector<TypeRow> rows;
};

enum class BreakdownDimension { Question, Answer };

struct BreakdownOptions {
  BreakdownDimension dimension = BreakdownDimension::Question;
  const KeywordTable* keywords = nullptr;  // required for Question
  const AnswerTagger* tagger = nullptr;
};

// Groups gold questions by type and aggregates the run's per-question F1.
// Throws ValidationError when a gold question has no score in some iteration.
Breakdown breakdown_report(const RunArtifacts& run, const Dataset& gold,
                           const BreakdownOptions& options);

nlohmann::ordered_json to_json(const Breakdown& b);
std::string format_table(const Breakdown& b);
// "type,x,y" rows: (zero-shot F1, delta F1) or (pseudo-label count, delta F1).
std::string scatter_zero_shot_csv(const Breakdown& b);
std::string scatter_pseudo_count_csv(const Breakdown& b);

// One self-training run per theta, all from the same M0, each in
// <run_dir>/theta_<theta> when run.run_dir is set. Returns the final
// iteration's evaluation per theta.
std::map<double, EvalReport> threshold_sweep(const Reader& reader, const ReaderModel& m0,
                                             const Dataset& d_t, const Dataset& gold,
                                             const std::vector<double>& thetas,
                                             const RunConfig& run, int jobs = 1);

std::string theta_dir_name(double theta);

}  // namespace spanforge
