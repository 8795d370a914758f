#include "spanforge/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <sstream>

#include "spanforge/error.hpp"
#include "spanforge/utf8.hpp"

#ifndef SPANFORGE_DATA_DIR
#define SPANFORGE_DATA_DIR "data"
#endif

namespace spanforge {
namespace {

struct TypeName {
  QuestionType type;
  std::string_view id;
  std::string_view label;
};

constexpr TypeName kTypeNames[] = {
    {QuestionType::Who, "Who", "Who"},
    {QuestionType::What, "What", "What"},
    {QuestionType::When, "When", "When"},
    {QuestionType::Where, "Where", "Where"},
    {QuestionType::Why, "Why", "Why"},
    {QuestionType::Which, "Which", "Which"},
    {QuestionType::How, "How", "How"},
    {QuestionType::HowMany, "HowMany", "How many"},
    {QuestionType::WhatQuoi, "WhatQuoi", "What (quoi)"},
    {QuestionType::WhatQue, "WhatQue", "What (que)"},
    {QuestionType::Other, "Other", "Other"},
};

bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }

// Lowercased words. With keep_elision, a word directly followed by an
// apostrophe keeps it ("qu'est" -> "qu'", "est").
std::vector<std::string> words(std::string_view text, bool keep_elision) {
  const auto chars = utf8::to_lower(utf8::decode(text));
  std::vector<std::string> out;
  std::u32string current;
  const auto flush = [&] {
    if (!current.empty()) out.push_back(utf8::encode(current));
    current.clear();
  };
  for (char32_t c : chars) {
    if (keep_elision && is_apostrophe(c) && !current.empty()) {
      current.push_back(U'\'');
      flush();
    } else if (utf8::is_space(c) || utf8::is_punct(c)) {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return out;
}

std::string normalize_keyword(std::string_view k) {
  auto chars = utf8::to_lower(utf8::decode(k));
  for (auto& c : chars) {
    if (c == 0x2019) c = U'\'';
  }
  return utf8::encode(chars);
}

const std::vector<std::string> kEnglishAnswerTypes = {
    "Date", "Other Numeric", "Person", "Location", "Other Entity",
    "Common Noun Phrase", "Verb Phrase", "Adjective Phrase", "Clause", "Other"};
const std::vector<std::string> kFrenchAnswerTypes = {
    "Date", "Other Numeric", "Person", "Location", "Other Proper Nouns",
    "Common Noun", "Verb", "Adjective", "Other"};
const std::vector<std::string> kChineseAnswerTypes = {"Numeric", "Entity", "Description"};
const std::vector<std::string> kKoreanAnswerTypes = {"Other"};

bool contains_word(const std::vector<std::string>& haystack,
                   std::initializer_list<std::string_view> needles) {
  for (const auto& w : haystack) {
    for (auto n : needles) {
      if (w == n) return true;
    }
  }
  return false;
}

const std::initializer_list<std::string_view> kMonths = {
    "january", "february", "march", "april", "may", "june", "july", "august",
    "september", "october", "november", "december", "jan", "feb", "mar", "apr",
    "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    "janvier", "février", "fevrier", "mars", "avril", "mai", "juin", "juillet",
    "août", "aout", "septembre", "octobre", "novembre", "décembre", "decembre"};

const std::initializer_list<std::string_view> kNumberWords = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
    "seventeen", "eighteen", "nineteen", "twenty", "thirty", "forty", "fifty",
    "sixty", "seventy", "eighty", "ninety", "hundred", "thousand", "million",
    "billion", "trillion", "dozen", "and",
    "zéro", "un", "une", "deux", "trois", "quatre", "cinq", "sept", "huit", "neuf",
    "dix", "onze", "douze", "treize", "quatorze", "quinze", "seize", "vingt",
    "vingts", "trente", "quarante", "cinquante", "soixante", "cent", "cents", "mille",
    "millions", "milliard", "milliards", "et"};

bool latin_date(std::string_view text, const std::vector<std::string>& ws) {
  if (contains_word(ws, kMonths)) return true;
  static const std::regex year(
      R"(^\s*((in|en|since|depuis|around|vers|circa|c\.)\s+)?(1\d{3}|20\d{2})s?\s*$)",
      std::regex::icase);
  static const std::regex year_range(R"(^\s*(1\d{3}|20\d{2})\s*[-–]\s*(1\d{3}|20\d{2})\s*$)");
  static const std::regex numeric_date(R"(^\s*\d{1,2}[/.-]\d{1,2}[/.-]\d{2,4}\s*$)");
  const std::string s(text);
  return std::regex_match(s, year) || std::regex_match(s, year_range) ||
         std::regex_match(s, numeric_date);
}

bool latin_numeric(std::string_view text) {
  // Split on whitespace only so "1,000" and "3.5" stay whole.
  static const std::regex number(R"(^[$€£]?\d[\d,.]*%?$)");
  std::istringstream in{std::string(text)};
  std::string tok;
  bool any = false;
  while (in >> tok) {
    any = true;
    const auto lowered = utf8::encode(utf8::to_lower(utf8::decode(tok)));
    bool word = false;
    for (auto w : kNumberWords) word = word || lowered == w;
    if (!word && !std::regex_match(tok, number) && tok != "%") return false;
  }
  return any;
}

bool is_cjk_numeral(char32_t c) {
  static constexpr std::u32string_view kNumerals = U"零〇一二三四五六七八九十百千萬万億亿兩两";
  return kNumerals.find(c) != std::u32string_view::npos;
}

bool cjk_date(std::u32string_view s) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if ((s[i] == U'年' || s[i] == U'月' || s[i] == U'日') &&
        (utf8::is_digit(s[i - 1]) || is_cjk_numeral(s[i - 1]))) {
      return true;
    }
  }
  return false;
}

bool cjk_numeric(std::u32string_view s) {
  static constexpr std::u32string_view kMeasures = U"個个人年歲岁次名位座件種种元米公里%％倍";
  std::size_t end = s.size();
  while (end > 0 && (kMeasures.find(s[end - 1]) != std::u32string_view::npos ||
                     utf8::is_space(s[end - 1]))) {
    --end;
  }
  if (end == 0) return false;
  bool any_numeral = false;
  for (std::size_t i = 0; i < end; ++i) {
    const char32_t c = s[i];
    if (utf8::is_digit(c) || is_cjk_numeral(c)) {
      any_numeral = true;
    } else if (c != U',' && c != U'.' && c != U'，' && !utf8::is_space(c)) {
      return false;
    }
  }
  return any_numeral;
}

std::string fallback_answer_type(std::string_view answer, Language lang) {
  switch (lang) {
    case Language::Zh: {
      const auto chars = utf8::decode(answer);
      if (cjk_date(chars) || cjk_numeric(chars)) return "Numeric";
      return "Description";
    }
    case Language::Ko:
      return "Other";
    case Language::En:
    case Language::Fr: {
      const auto ws = words(answer, false);
      if (latin_date(answer, ws)) return "Date";
      if (latin_numeric(answer)) return "Other Numeric";
      return "Other";
    }
  }
  return "Other";
}

std::string tagged_answer_type(const TaggerOutput& tags, Language lang) {
  std::string ner;
  for (const auto& t : tags.ner) {
    if (t != "O" && !t.empty()) {
      // BIO/BIOES chunk prefixes: B-PERSON -> PERSON.
      const bool chunked = t.size() > 2 && t[1] == '-' &&
                           std::string_view("BIES").find(t[0]) != std::string_view::npos;
      ner = chunked ? t.substr(2) : t;
      break;
    }
  }
  const auto any_of = [&](std::initializer_list<std::string_view> names) {
    for (auto n : names) {
      if (ner == n) return true;
    }
    return false;
  };
  const bool date = any_of({"DATE", "TIME", "DURATION", "SET"});
  const bool number = any_of({"NUMBER", "CARDINAL", "ORDINAL", "MONEY", "PERCENT",
                              "QUANTITY"});
  const bool person = any_of({"PERSON", "PER"});
  const bool location = any_of({"LOCATION", "LOC", "GPE", "CITY", "COUNTRY",
                                "STATE_OR_PROVINCE"});
  const bool entity = !ner.empty() && !date && !number && !person && !location;

  if (lang == Language::Zh) {
    if (date || number) return "Numeric";
    if (person || location || entity) return "Entity";
    return "Description";
  }
  if (lang == Language::Ko) return "Other";
  const bool fr = lang == Language::Fr;
  if (date) return "Date";
  if (number) return "Other Numeric";
  if (person) return "Person";
  if (location) return "Location";
  if (entity) return fr ? "Other Proper Nouns" : "Other Entity";
  const auto& p = tags.phrase;
  if (p == "NP" || p == "NN" || p == "NOUN") return fr ? "Common Noun" : "Common Noun Phrase";
  if (p == "VP" || p == "VERB") return fr ? "Verb" : "Verb Phrase";
  if (p == "ADJP" || p == "ADJ") return fr ? "Adjective" : "Adjective Phrase";
  if (!fr && (p == "S" || p == "SBAR" || p == "SINV" || p == "SQ")) return "Clause";
  return "Other";
}

double mean_f1(const std::vector<const Question*>& qs,
               const std::map<std::string, QuestionScore>& scores, int iteration) {
  if (qs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* q : qs) {
    const auto it = scores.find(q->id);
    if (it == scores.end()) {
      throw ValidationError("iteration " + std::to_string(iteration) +
                            " has no score for question '" + q->id + "'");
    }
    sum += it->second.f1;
  }
  return 100.0 * sum / static_cast<double>(qs.size());
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string_view question_type_label(QuestionType type) {
  for (const auto& t : kTypeNames) {
    if (t.type == type) return t.label;
  }
  return "Other";
}

QuestionType parse_question_type(std::string_view name) {
  for (const auto& t : kTypeNames) {
    if (t.id == name) return t.type;
  }
  throw FormatError("unknown question type '" + std::string(name) + "'");
}

KeywordTable KeywordTable::from_json(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("keyword table: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("keyword table: expected an object");
  std::map<Language, Entries> entries;
  for (const auto& [code, types] : j.items()) {
    const auto lang = parse_language(code);
    if (!types.is_object()) throw FormatError("keyword table: '" + code + "' must be an object");
    Entries list;
    for (const auto& [type, keywords] : types.items()) {
      std::vector<std::string> ks;
      for (const auto& k : keywords) {
        if (!k.is_string()) throw FormatError("keyword table: keywords must be strings");
        ks.push_back(normalize_keyword(k.get<std::string>()));
      }
      list.emplace_back(parse_question_type(type), std::move(ks));
    }
    entries[lang] = std::move(list);
  }
  return KeywordTable(std::move(entries));
}

KeywordTable KeywordTable::load(const std::filesystem::path& path) {
  try {
    return from_json(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::filesystem::path KeywordTable::default_path() {
  return std::filesystem::path(SPANFORGE_DATA_DIR) / "keywords.json";
}

KeywordTable KeywordTable::load_default() { return load(default_path()); }

const KeywordTable::Entries* KeywordTable::entries(Language lang) const {
  const auto it = entries_.find(lang);
  return it == entries_.end() ? nullptr : &it->second;
}

QuestionType classify_question(const Question& question, Language lang,
                               const KeywordTable& table) {
  const auto* entries = table.entries(lang);
  if (entries == nullptr) return QuestionType::Other;
  switch (lang) {
    case Language::Zh: {
      for (const auto& [type, keywords] : *entries) {
        for (const auto& k : keywords) {
          if (question.text.find(k) != std::string::npos) return type;
        }
      }
      return QuestionType::Other;
    }
    case Language::Fr: {
      const auto ws = words(question.text, true);
      if (ws.empty()) return QuestionType::Other;
      for (const auto& [type, keywords] : *entries) {
        if (std::find(keywords.begin(), keywords.end(), ws.front()) != keywords.end()) {
          return type;
        }
      }
      return QuestionType::Other;
    }
    case Language::En:
    case Language::Ko: {
      const auto ws = words(question.text, false);
      for (const auto& [type, keywords] : *entries) {
        for (const auto& k : keywords) {
          if (std::find(ws.begin(), ws.end(), k) != ws.end()) return type;
        }
      }
      return QuestionType::Other;
    }
  }
  return QuestionType::Other;
}

const std::vector<std::string>& answer_categories(Language lang) {
  switch (lang) {
    case Language::En: return kEnglishAnswerTypes;
    case Language::Fr: return kFrenchAnswerTypes;
    case Language::Zh: return kChineseAnswerTypes;
    case Language::Ko: return kKoreanAnswerTypes;
  }
  return kKoreanAnswerTypes;
}

const std::vector<QuestionType>& question_categories(Language lang) {
  using enum QuestionType;
  static const std::vector<QuestionType> kEightWay = {Who, What, When, Where,
                                                      Why, Which, How, Other};
  static const std::vector<QuestionType> kFrench = {Who, WhatQuoi, WhatQue, When, Where,
                                                    Why, How, HowMany, Other};
  static const std::vector<QuestionType> kNone = {Other};
  switch (lang) {
    case Language::Fr: return kFrench;
    case Language::Ko: return kNone;
    default: return kEightWay;
  }
}

AnswerType classify_answer(std::string_view answer, Language lang,
                           const AnswerTagger* tagger) {
  if (tagger != nullptr) {
    try {
      return {tagged_answer_type(tagger->tag(answer, lang), lang), false};
    } catch (const TransportError&) {
      return {fallback_answer_type(answer, lang), true};
    }
  }
  return {fallback_answer_type(answer, lang), false};
}

RunArtifacts RunArtifacts::load(const std::filesystem::path& run_dir) {
  RunArtifacts run;
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(read_file(run_dir / "config.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError((run_dir / "config.json").string() + ": " + e.what());
  }
  run.language = run_config_from_json(config).language;

  for (int i = 0;; ++i) {
    const auto dir = iteration_dir(run_dir, i);
    if (!std::filesystem::is_directory(dir)) break;
    Iteration it;
    it.iteration = i;
    const auto eval_path = dir / "eval.json";
    if (!std::filesystem::exists(eval_path)) {
      throw ValidationError(dir.string() + ": missing per-question scores (eval.json); "
                            "was the run evaluated?");
    }
    try {
      it.per_question = eval_report_from_json(nlohmann::json::parse(read_file(eval_path)))
                            .per_question;
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(eval_path.string() + ": " + e.what());
    }
    const auto pseudo = load_squad_json(dir / "pseudo.json", true, run.language);
    for (const auto& q : pseudo.questions()) {
      it.pseudo_labels.push_back({q.id, q.text, pseudo.answers_for(q.id).front().text});
    }
    run.iterations.push_back(std::move(it));
  }
  if (run.iterations.empty()) {
    throw ValidationError(run_dir.string() + ": no iteration directories found");
  }
  return run;
}

Breakdown breakdown_report(const RunArtifacts& run, const Dataset& gold,
                           const BreakdownOptions& options) {
  if (run.iterations.empty()) throw ValidationError("run has no iterations");
  const bool by_question = options.dimension == BreakdownDimension::Question;
  if (by_question && options.keywords == nullptr) {
    throw ContractError("question breakdown needs a keyword table");
  }
  const auto lang = gold.language();

  const auto question_label = [&](const Question& q) {
    return std::string(question_type_label(classify_question(q, lang, *options.keywords)));
  };
  const auto answer_label = [&](std::string_view text) {
    return classify_answer(text, lang, options.tagger).label;
  };

  std::vector<std::string> order;
  if (by_question) {
    for (auto t : question_categories(lang)) order.emplace_back(question_type_label(t));
  } else {
    order = answer_categories(lang);
  }

  std::map<std::string, std::vector<const Question*>> groups;
  for (const auto& q : gold.questions()) {
    const auto golds = gold.answers_for(q.id);
    const auto type = by_question ? question_label(q)
                                  : answer_label(golds.empty() ? "" : golds.front().text);
    groups[type].push_back(&q);
    if (std::find(order.begin(), order.end(), type) == order.end()) order.push_back(type);
  }

  std::map<std::string, std::size_t> pseudo_counts;
  for (const auto& item : run.iterations.front().pseudo_labels) {
    const auto type = by_question ? question_label(Question{item.question_id, "", item.question})
                                  : answer_label(item.answer);
    ++pseudo_counts[type];
    if (std::find(order.begin(), order.end(), type) == order.end()) order.push_back(type);
  }

  Breakdown out;
  out.dimension = by_question ? "question" : "answer";
  for (const auto& type : order) {
    const auto g = groups.find(type);
    if (g == groups.end()) continue;
    TypeRow row;
    row.type = type;
    row.n = g->second.size();
    row.zero_shot_f1 = mean_f1(g->second, run.iterations[0].per_question, 0);
    for (std::size_t i = 1; i < run.iterations.size(); ++i) {
      row.iter_f1.push_back(mean_f1(g->second, run.iterations[i].per_question,
                                    run.iterations[i].iteration));
    }
    if (!row.iter_f1.empty()) row.delta_f1 = row.iter_f1.front() - row.zero_shot_f1;
    const auto pc = pseudo_counts.find(type);
    row.pseudo_label_count = pc == pseudo_counts.end() ? 0 : pc->second;
    out.rows.push_back(std::move(row));
  }
  return out;
}

nlohmann::ordered_json to_json(const Breakdown& b) {
  nlohmann::ordered_json j;
  j["dimension"] = b.dimension;
  auto& rows = j["by_type"] = nlohmann::ordered_json::array();
  for (const auto& r : b.rows) {
    nlohmann::ordered_json row;
    row["type"] = r.type;
    row["n"] = r.n;
    row["zero_shot_f1"] = r.zero_shot_f1;
    row["iter_f1"] = r.iter_f1;
    row["delta_f1"] = r.delta_f1 ? nlohmann::ordered_json(*r.delta_f1) : nullptr;
    row["pseudo_label_count"] = r.pseudo_label_count;
    rows.push_back(std::move(row));
  }
  return j;
}

std::string format_table(const Breakdown& b) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {b.dimension == "answer" ? "Answer type" : "Question type",
                                     "n", "Zero-shot"};
  const std::size_t iters = b.rows.empty() ? 0 : b.rows.front().iter_f1.size();
  for (std::size_t i = 0; i < iters; ++i) header.push_back("Iter " + std::to_string(i + 1));
  header.push_back("dF1");
  header.push_back("Pseudo-labels");
  cells.push_back(header);
  for (const auto& r : b.rows) {
    std::vector<std::string> row = {r.type, std::to_string(r.n), fixed2(r.zero_shot_f1)};
    for (double f : r.iter_f1) row.push_back(fixed2(f));
    row.push_back(r.delta_f1 ? fixed2(*r.delta_f1) : "-");
    row.push_back(std::to_string(r.pseudo_label_count));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], utf8::length(row[c]));
    }
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto pad = std::string(width[c] - utf8::length(row[c]), ' ');
      if (c == 0) {
        out += row[c] + pad;
      } else {
        out += "  " + pad + row[c];
      }
    }
    out += "\n";
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) { return nlohmann::json(v).dump(); }

}  // namespace

std::string scatter_zero_shot_csv(const Breakdown& b) {
  std::string out = "type,x,y\n";
  for (const auto& r : b.rows) {
    if (!r.delta_f1) continue;
    out += csv_field(r.type) + "," + number(r.zero_shot_f1) + "," + number(*r.delta_f1) + "\n";
  }
  return out;
}

std::string scatter_pseudo_count_csv(const Breakdown& b) {
  std::string out = "type,x,y\n";
  for (const auto& r : b.rows) {
    if (!r.delta_f1) continue;
    out += csv_field(r.type) + "," + std::to_string(r.pseudo_label_count) + "," +
           number(*r.delta_f1) + "\n";
  }
  return out;
}

std::string theta_dir_name(double theta) { return "theta_" + number(theta); }

std::map<double, EvalReport> threshold_sweep(const Reader& reader, const ReaderModel& m0,
                                             const Dataset& d_t, const Dataset& gold,
                                             const std::vector<double>& thetas,
                                             const RunConfig& run, int jobs) {
  if (thetas.empty()) throw ContractError("threshold sweep needs at least one theta");
  std::map<double, EvalReport> out;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (double theta : thetas) {
    RunConfig sub = run;
    sub.theta = theta;
    if (!run.run_dir.empty()) sub.run_dir = run.run_dir / theta_dir_name(theta);
    const auto result = self_train(reader, m0, d_t, sub, &gold, jobs);
    const auto& last = result.records.back();
    out[theta] = *last.eval;
    nlohmann::ordered_json entry;
    entry["theta"] = theta;
    entry["em"] = last.eval->em;
    entry["f1"] = last.eval->f1;
    auto counts = nlohmann::ordered_json::array();
    auto f1s = nlohmann::ordered_json::array();
    for (const auto& r : result.records) {
      counts.push_back(r.pseudo_label_count);
      f1s.push_back(r.eval->f1);
    }
    entry["pseudo_label_counts"] = std::move(counts);
    entry["iteration_f1"] = std::move(f1s);
    summary.push_back(std::move(entry));
  }
  if (!run.run_dir.empty()) write_file(run.run_dir / "sweep.json", summary.dump(2) + "\n");
  return out;
}

}  // namespace spanforge
