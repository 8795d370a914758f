#include "spanforge/reader.hpp"

#include <cmath>
#include <cstdio>

#include "spanforge/error.hpp"
#include "spanforge/parallel.hpp"

namespace spanforge {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (max_question_tokens < 1) throw ValidationError("max_question_tokens must be >= 1");
  if (doc_stride <= 0 || doc_stride >= max_context_tokens) {
    throw ValidationError("doc_stride must satisfy 0 < doc_stride < max_context_tokens");
  }
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"seed", c.seed},
           {"max_context_tokens", c.max_context_tokens},
           {"max_question_tokens", c.max_question_tokens},
           {"doc_stride", c.doc_stride}};
}

void from_json(const json& j, TrainConfig& c) {
  TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.seed = j.value("seed", d.seed);
  c.max_context_tokens = j.value("max_context_tokens", d.max_context_tokens);
  c.max_question_tokens = j.value("max_question_tokens", d.max_question_tokens);
  c.doc_stride = j.value("doc_stride", d.doc_stride);
}

std::string_view reader_kind_name(ReaderKind kind) {
  return kind == ReaderKind::Toy ? "toy" : "external";
}

ReaderKind parse_reader_kind(std::string_view name) {
  if (name == "toy") return ReaderKind::Toy;
  if (name == "external") return ReaderKind::External;
  throw ValidationError("unknown reader kind '" + std::string(name) + "'");
}

std::string serialize_model(const ReaderModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "spanforge-checkpoint";
  j["version"] = 1;
  j["kind"] = reader_kind_name(model.kind);
  j["config"] = json(model.config);
  j["state"] = model.state;
  return j.dump(2) + "\n";
}

ReaderModel deserialize_model(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.value("format", "") != "spanforge-checkpoint") {
      throw FormatError("not a spanforge checkpoint");
    }
    ReaderModel m;
    m.kind = parse_reader_kind(j.at("kind").get<std::string>());
    m.config = j.at("config").get<TrainConfig>();
    m.state = j.at("state").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ReaderModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

ReaderModel load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string checkpoint_digest(const ReaderModel& model) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_model(model)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

json to_wire_json(const SpanDistributions& d) {
  json windows = json::array();
  for (const auto& w : d.windows) {
    json offsets = json::array();
    for (const auto& o : w.token_offsets) offsets.push_back({o.begin, o.end});
    windows.push_back(
        {{"token_offsets", offsets}, {"start_probs", w.start_probs}, {"end_probs", w.end_probs}});
  }
  return json{{"windows", windows}};
}

SpanDistributions span_distributions_from_json(const json& j) {
  SpanDistributions d;
  try {
    for (const auto& w : j.at("windows")) {
      SpanWindow window;
      for (const auto& o : w.at("token_offsets")) {
        window.token_offsets.push_back({o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>()});
      }
      window.start_probs = w.at("start_probs").get<std::vector<double>>();
      window.end_probs = w.at("end_probs").get<std::vector<double>>();
      d.windows.push_back(std::move(window));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed span distributions: ") + e.what());
  }
  try {
    check_distributions(d);
  } catch (const ValidationError& e) {
    throw FormatError(e.what());
  }
  return d;
}

void check_distributions(const SpanDistributions& d, double tolerance) {
  for (std::size_t i = 0; i < d.windows.size(); ++i) {
    const auto& w = d.windows[i];
    const auto n = w.token_offsets.size();
    const auto where = "window " + std::to_string(i);
    if (w.start_probs.size() != n || w.end_probs.size() != n) {
      throw ValidationError(where + ": probability lengths do not match token count");
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (w.token_offsets[t].begin >= w.token_offsets[t].end ||
          (t > 0 && w.token_offsets[t].begin < w.token_offsets[t - 1].end)) {
        throw ValidationError(where + ": token offsets must be increasing and disjoint");
      }
    }
    if (n == 0) continue;
    for (const auto* probs : {&w.start_probs, &w.end_probs}) {
      double sum = 0.0;
      for (double p : *probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw ValidationError(where + ": probabilities must be finite and non-negative");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > tolerance) {
        throw ValidationError(where + ": probabilities sum to " + std::to_string(sum));
      }
    }
  }
}

std::vector<std::size_t> window_starts(std::size_t n_tokens, std::size_t max_tokens,
                                       std::size_t stride) {
  std::vector<std::size_t> starts;
  if (n_tokens == 0) return starts;
  if (stride == 0 && n_tokens > max_tokens) {
    throw ContractError("window stride must be positive");
  }
  for (std::size_t s = 0;; s += stride) {
    starts.push_back(s);
    if (s + max_tokens >= n_tokens) break;
  }
  return starts;
}

std::vector<SpanDistributions> Reader::predict_batch(const ReaderModel& model,
                                                     std::span<const PredictItem> items,
                                                     Language language, int jobs) const {
  std::vector<SpanDistributions> out(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    out[i] = predict(model, *items[i].context, *items[i].question, language);
  });
  return out;
}

}  // namespace spanforge
