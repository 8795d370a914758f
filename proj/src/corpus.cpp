#include "spanforge/corpus.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "spanforge/error.hpp"
#include "spanforge/utf8.hpp"

namespace spanforge {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void format_error(std::string_view source, const std::string& path,
                               const std::string& what) {
  throw FormatError(std::string(source) + ": " + path + ": " + what);
}

void check_keys(const json& obj, std::string_view source, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) format_error(source, path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) format_error(source, path, "unsupported key '" + key + "'");
  }
}

const json& require(const json& obj, std::string_view source,
                    const std::string& path, const char* key,
                    json::value_t type) {
  const auto it = obj.find(key);
  if (it == obj.end()) format_error(source, path, std::string("missing '") + key + "'");
  if (it->type() != type) {
    format_error(source, path + "." + key, "unexpected JSON type");
  }
  return *it;
}

std::string id_string(const json& value, std::string_view source,
                      const std::string& path) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  format_error(source, path, "id must be a string");
}

}  // namespace

Dataset::Dataset(std::vector<Context> contexts, std::vector<Question> questions,
                 std::optional<AnswerMap> answers, Language language)
    : contexts_(std::move(contexts)),
      questions_(std::move(questions)),
      answers_(std::move(answers)),
      language_(language) {
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    const auto& c = contexts_[i];
    if (c.text.empty()) {
      throw ValidationError("context '" + c.id + "' has empty text");
    }
    if (!context_index_.emplace(c.id, i).second) {
      throw ValidationError("duplicate context id '" + c.id + "'");
    }
  }
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const auto& q = questions_[i];
    if (!context_index_.contains(q.context_id)) {
      throw ValidationError("question '" + q.id + "' refers to unknown context '" +
                            q.context_id + "'");
    }
    if (!question_index_.emplace(q.id, i).second) {
      throw ValidationError("duplicate question id '" + q.id + "'");
    }
  }
  if (!answers_) return;

  std::unordered_map<std::string, std::u32string> decoded;
  for (const auto& [qid, spans] : *answers_) {
    const auto* q = find_question(qid);
    if (q == nullptr) {
      throw ValidationError("answers given for unknown question '" + qid + "'");
    }
    auto it = decoded.find(q->context_id);
    if (it == decoded.end()) {
      it = decoded.emplace(q->context_id, utf8::decode(context_of(*q).text)).first;
    }
    for (const auto& span : spans) check_answer_span(span, it->second, qid);
  }
}

bool Dataset::labeled() const {
  if (!answers_) return false;
  for (const auto& q : questions_) {
    const auto it = answers_->find(q.id);
    if (it == answers_->end() || it->second.empty()) return false;
  }
  return true;
}

const Context* Dataset::find_context(std::string_view id) const {
  const auto it = context_index_.find(std::string(id));
  return it == context_index_.end() ? nullptr : &contexts_[it->second];
}

const Question* Dataset::find_question(std::string_view id) const {
  const auto it = question_index_.find(std::string(id));
  return it == question_index_.end() ? nullptr : &questions_[it->second];
}

const Context& Dataset::context_of(const Question& q) const {
  const auto* c = find_context(q.context_id);
  if (c == nullptr) {
    throw ValidationError("question '" + q.id + "' refers to unknown context");
  }
  return *c;
}

std::span<const AnswerSpan> Dataset::answers_for(std::string_view question_id) const {
  if (!answers_) return {};
  const auto it = answers_->find(std::string(question_id));
  if (it == answers_->end()) return {};
  return it->second;
}

Dataset Dataset::without_answers() const {
  return Dataset(contexts_, questions_, std::nullopt, language_);
}

void check_answer_span(const AnswerSpan& answer, std::u32string_view context_text,
                       std::string_view question_id) {
  const auto answer_chars = utf8::decode(answer.text);
  if (answer.char_start > context_text.size() ||
      answer_chars.size() > context_text.size() - answer.char_start) {
    throw ValidationError("question '" + std::string(question_id) +
                          "': answer_start " + std::to_string(answer.char_start) +
                          " out of range for a context of " +
                          std::to_string(context_text.size()) + " characters");
  }
  if (context_text.substr(answer.char_start, answer_chars.size()) != answer_chars) {
    throw ValidationError("question '" + std::string(question_id) + "': answer '" +
                          answer.text + "' does not match the context at offset " +
                          std::to_string(answer.char_start));
  }
}

Dataset parse_squad_json(std::string_view text, bool expect_labels, Language language,
                         std::string_view source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    format_error(source, "$", e.what());
  }
  check_keys(doc, source, "$", {"data", "version"});
  const auto& data = require(doc, source, "$", "data", json::value_t::array);

  std::vector<Context> contexts;
  std::vector<Question> questions;
  AnswerMap answers;
  bool any_answers = false;

  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string apath = "$.data[" + std::to_string(a) + "]";
    const auto& article = data[a];
    check_keys(article, source, apath, {"title", "paragraphs"});
    std::string title;
    if (article.contains("title")) {
      if (!article["title"].is_string()) format_error(source, apath + ".title", "expected a string");
      title = article["title"].get<std::string>();
    }
    const auto& paragraphs =
        require(article, source, apath, "paragraphs", json::value_t::array);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string ppath = apath + ".paragraphs[" + std::to_string(p) + "]";
      const auto& para = paragraphs[p];
      check_keys(para, source, ppath, {"id", "context", "qas"});
      Context ctx;
      ctx.id = para.contains("id") ? id_string(para["id"], source, ppath + ".id")
                                   : "ctx-" + std::to_string(a) + "-" + std::to_string(p);
      ctx.text = require(para, source, ppath, "context", json::value_t::string)
                     .get<std::string>();
      ctx.title = title;
      const auto& qas = require(para, source, ppath, "qas", json::value_t::array);
      for (std::size_t k = 0; k < qas.size(); ++k) {
        const std::string qpath = ppath + ".qas[" + std::to_string(k) + "]";
        const auto& qa = qas[k];
        check_keys(qa, source, qpath, {"id", "question", "answers"});
        if (!qa.contains("id")) format_error(source, qpath, "missing 'id'");
        Question q;
        q.id = id_string(qa["id"], source, qpath + ".id");
        q.context_id = ctx.id;
        q.text = require(qa, source, qpath, "question", json::value_t::string)
                     .get<std::string>();
        std::vector<AnswerSpan> spans;
        if (qa.contains("answers")) {
          const auto& arr = qa["answers"];
          if (!arr.is_array()) format_error(source, qpath + ".answers", "expected an array");
          for (std::size_t n = 0; n < arr.size(); ++n) {
            const std::string npath = qpath + ".answers[" + std::to_string(n) + "]";
            check_keys(arr[n], source, npath, {"text", "answer_start", "id"});
            AnswerSpan span;
            span.text = require(arr[n], source, npath, "text", json::value_t::string)
                            .get<std::string>();
            const auto it = arr[n].find("answer_start");
            if (it == arr[n].end() || !it->is_number_integer() ||
                it->get<long long>() < 0) {
              format_error(source, npath + ".answer_start",
                           "expected a non-negative integer");
            }
            span.char_start = it->get<std::size_t>();
            spans.push_back(std::move(span));
          }
        }
        if (expect_labels && spans.empty()) {
          throw MissingLabelError(std::string(source) + ": question '" + q.id +
                                  "' has no answers");
        }
        if (!spans.empty()) {
          any_answers = true;
          answers[q.id] = std::move(spans);
        }
        questions.push_back(std::move(q));
      }
      contexts.push_back(std::move(ctx));
    }
  }

  // Validation runs on the answers even when they are about to be dropped.
  Dataset full(std::move(contexts), std::move(questions),
               any_answers ? std::optional<AnswerMap>(std::move(answers)) : std::nullopt,
               language);
  return expect_labels ? full : full.without_answers();
}

Dataset load_squad_json(const std::filesystem::path& path, bool expect_labels,
                        Language language) {
  const auto contents = read_file(path);
  return parse_squad_json(contents, expect_labels, language, path.string());
}

std::string to_squad_json(const Dataset& dataset) {
  ordered_json data = ordered_json::array();
  ordered_json* article = nullptr;
  std::string current_title;

  std::unordered_map<std::string, std::vector<const Question*>> by_context;
  for (const auto& q : dataset.questions()) by_context[q.context_id].push_back(&q);

  for (const auto& ctx : dataset.contexts()) {
    if (article == nullptr || ctx.title != current_title) {
      ordered_json a;
      a["title"] = ctx.title;
      a["paragraphs"] = ordered_json::array();
      data.push_back(std::move(a));
      article = &data.back();
      current_title = ctx.title;
    }
    ordered_json para;
    para["id"] = ctx.id;
    para["context"] = ctx.text;
    para["qas"] = ordered_json::array();
    for (const auto* q : by_context[ctx.id]) {
      ordered_json qa;
      qa["id"] = q->id;
      qa["question"] = q->text;
      qa["answers"] = ordered_json::array();
      for (const auto& span : dataset.answers_for(q->id)) {
        qa["answers"].push_back({{"text", span.text}, {"answer_start", span.char_start}});
      }
      para["qas"].push_back(std::move(qa));
    }
    (*article)["paragraphs"].push_back(std::move(para));
  }
  ordered_json doc;
  doc["version"] = "1.1";
  doc["data"] = std::move(data);
  return doc.dump() + "\n";
}

void save_squad_json(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, to_squad_json(dataset));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace spanforge
