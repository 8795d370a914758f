#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spanforge/corpus.hpp"
#include "spanforge/text.hpp"

namespace spanforge {

enum class Granularity { Word, Character };

struct MetricOptions {
  // Token unit for Korean F1. Chinese always uses characters, English and
  // French always use words.
  Granularity korean = Granularity::Character;
};

// Tokens that F1 counts, taken from an already-normalized string.
std::vector<std::string> metric_tokens(std::string_view normalized, Language lang,
                                       const MetricOptions& options = {});

// 1 if the normalized prediction equals any normalized gold, else 0.
// Throws ContractError when golds is empty.
double exact_match(std::string_view prediction, std::span<const std::string> golds,
                   Language lang);

// Multiset token-overlap F1, maximised over golds.
double f1_score(std::string_view prediction, std::span<const std::string> golds,
                Language lang, const MetricOptions& options = {});

struct QuestionScore {
  double em = 0.0;
  double f1 = 0.0;

  friend bool operator==(const QuestionScore&, const QuestionScore&) = default;
};

struct EvalReport {
  double em = 0.0;  // percentage
  double f1 = 0.0;  // percentage
  std::map<std::string, QuestionScore> per_question;  // fractions in [0, 1]
  std::size_t n = 0;
  std::size_t missing = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

using Predictions = std::map<std::string, std::string>;

// Scores every gold question; questions without a prediction score 0 and are
// counted in `missing`. Throws ContractError when gold is unlabeled.
EvalReport evaluate(const Predictions& predictions, const Dataset& gold,
                    const MetricOptions& options = {});

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

// {question_id: answer_string}
Predictions load_predictions(const std::filesystem::path& path);
void save_predictions(const Predictions& predictions, const std::filesystem::path& path);

}  // namespace spanforge
