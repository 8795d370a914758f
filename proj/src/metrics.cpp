#include "spanforge/metrics.hpp"

#include <algorithm>
#include <unordered_map>

#include "spanforge/error.hpp"
#include "spanforge/utf8.hpp"

namespace spanforge {
namespace {

void require_golds(std::span<const std::string> golds) {
  if (golds.empty()) throw ContractError("at least one gold answer is required");
}

double token_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::unordered_map<std::string, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return (2.0 * precision * recall) / (precision + recall);
}

}  // namespace

std::vector<std::string> metric_tokens(std::string_view normalized, Language lang,
                                       const MetricOptions& options) {
  const bool by_char = lang == Language::Zh ||
                       (lang == Language::Ko && options.korean == Granularity::Character);
  const auto chars = utf8::decode(normalized);
  const auto tokens = by_char ? tokenize_characters(chars) : tokenize(chars, Language::En);
  // Normalized text carries no punctuation, so SpaceDelimited tokenization
  // reduces to a whitespace split.
  return tokens.tokens;
}

double exact_match(std::string_view prediction, std::span<const std::string> golds,
                   Language lang) {
  require_golds(golds);
  const auto pred = normalize_answer(prediction, lang);
  for (const auto& g : golds) {
    if (normalize_answer(g, lang) == pred) return 1.0;
  }
  return 0.0;
}

double f1_score(std::string_view prediction, std::span<const std::string> golds,
                Language lang, const MetricOptions& options) {
  require_golds(golds);
  const auto pred = metric_tokens(normalize_answer(prediction, lang), lang, options);
  double best = 0.0;
  for (const auto& g : golds) {
    best = std::max(best, token_f1(pred, metric_tokens(normalize_answer(g, lang), lang, options)));
  }
  return best;
}

EvalReport evaluate(const Predictions& predictions, const Dataset& gold,
                    const MetricOptions& options) {
  if (!gold.labeled() && !gold.empty()) {
    throw ContractError("evaluation needs a labeled gold dataset");
  }
  EvalReport report;
  for (const auto& q : gold.questions()) {
    std::vector<std::string> golds;
    for (const auto& a : gold.answers_for(q.id)) golds.push_back(a.text);
    QuestionScore score;
    const auto it = predictions.find(q.id);
    if (it == predictions.end()) {
      ++report.missing;
    } else {
      score.em = exact_match(it->second, golds, gold.language());
      score.f1 = f1_score(it->second, golds, gold.language(), options);
    }
    report.per_question[q.id] = score;
  }
  report.n = report.per_question.size();
  if (report.n == 0) return report;
  double em_sum = 0.0;
  double f1_sum = 0.0;
  for (const auto& [qid, score] : report.per_question) {
    em_sum += score.em;
    f1_sum += score.f1;
  }
  report.em = 100.0 * em_sum / static_cast<double>(report.n);
  report.f1 = 100.0 * f1_sum / static_cast<double>(report.n);
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["em"] = report.em;
  j["f1"] = report.f1;
  j["n"] = report.n;
  j["missing"] = report.missing;
  auto& per = j["per_question"] = nlohmann::ordered_json::object();
  for (const auto& [qid, s] : report.per_question) per[qid] = {{"em", s.em}, {"f1", s.f1}};
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.em = j.at("em").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.missing = j.value("missing", std::size_t{0});
    for (const auto& [qid, s] : j.at("per_question").items()) {
      r.per_question[qid] = {s.at("em").get<double>(), s.at("f1").get<double>()};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

Predictions load_predictions(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw FormatError(path.string() + ": expected a JSON object");
    Predictions out;
    for (const auto& [qid, answer] : j.items()) {
      if (!answer.is_string()) {
        throw FormatError(path.string() + ": prediction for '" + qid + "' is not a string");
      }
      out[qid] = answer.get<std::string>();
    }
    return out;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_predictions(const Predictions& predictions, const std::filesystem::path& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [qid, answer] : predictions) j[qid] = answer;
  write_file(path, j.dump(2) + "\n");
}

}  // namespace spanforge
