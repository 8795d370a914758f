#include "spanforge/toy_reader.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "spanforge/error.hpp"
#include "spanforge/utf8.hpp"

namespace spanforge {
namespace toy {

using nlohmann::json;

std::string encode_state(const Weights& w) {
  nlohmann::ordered_json j;
  j["w_start"] = w.start;
  j["w_end"] = w.end;
  return j.dump();
}

Weights decode_state(std::string_view state) {
  try {
    const auto j = json::parse(state);
    Weights w;
    w.start = j.at("w_start").get<Vec>();
    w.end = j.at("w_end").get<Vec>();
    return w;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed toy reader state: ") + e.what());
  }
}

namespace {

std::string lowercase(std::string_view token) {
  return utf8::encode(utf8::to_lower(utf8::decode(token)));
}

bool all_punct(std::string_view token) {
  for (char32_t c : utf8::decode(token)) {
    if (!utf8::is_punct(c)) return false;
  }
  return true;
}

}  // namespace

std::unordered_set<std::string> question_terms(std::string_view question, Language lang,
                                               std::size_t max_tokens) {
  const auto tokens = tokenize(question, lang);
  std::unordered_set<std::string> terms;
  for (std::size_t i = 0; i < tokens.size() && i < max_tokens; ++i) {
    if (!all_punct(tokens.tokens[i])) terms.insert(lowercase(tokens.tokens[i]));
  }
  return terms;
}

std::vector<Vec> window_features(std::span<const std::string> tokens,
                                 const std::unordered_set<std::string>& terms) {
  const auto n = tokens.size();
  std::vector<char> hit(n);
  for (std::size_t t = 0; t < n; ++t) hit[t] = terms.contains(tokens[t]) ? 1 : 0;
  std::vector<Vec> features(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= 2 ? t - 2 : 0;
    const std::size_t hi = std::min(n, t + 3);
    double overlap = 0.0;
    for (std::size_t u = lo; u < hi; ++u) overlap += hit[u];
    features[t] = {overlap, static_cast<double>(hit[t]),
                   static_cast<double>(t) / static_cast<double>(n), 1.0};
  }
  return features;
}

double dot(const Vec& w, const Vec& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) s += w[k] * f[k];
  return s;
}

std::vector<double> softmax(const Vec& w, std::span<const Vec> features) {
  std::vector<double> p(features.size());
  if (features.empty()) return p;
  double max_score = -INFINITY;
  for (std::size_t t = 0; t < features.size(); ++t) {
    p[t] = dot(w, features[t]);
    max_score = std::max(max_score, p[t]);
  }
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - max_score);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

double log_likelihood(const Vec& w, std::span<const Vec> features, std::size_t gold) {
  double max_score = -INFINITY;
  std::vector<double> scores(features.size());
  for (std::size_t t = 0; t < features.size(); ++t) {
    scores[t] = dot(w, features[t]);
    max_score = std::max(max_score, scores[t]);
  }
  double z = 0.0;
  for (double s : scores) z += std::exp(s - max_score);
  return scores[gold] - max_score - std::log(z);
}

Vec log_likelihood_gradient(const Vec& w, std::span<const Vec> features, std::size_t gold) {
  const auto p = softmax(w, features);
  Vec g = features[gold];
  for (std::size_t t = 0; t < features.size(); ++t) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) g[k] -= p[t] * features[t][k];
  }
  return g;
}

}  // namespace toy

namespace {

struct Instance {
  std::vector<toy::Vec> features;
  std::size_t start;
  std::size_t end;
};

struct ContextTokens {
  TokenizedText tokens;
  std::vector<std::string> lowered;
};

ContextTokens tokenize_context(const Context& context, Language lang) {
  ContextTokens out;
  out.tokens = tokenize(context.text, lang);
  out.lowered.reserve(out.tokens.size());
  for (const auto& t : out.tokens.tokens) {
    out.lowered.push_back(utf8::encode(utf8::to_lower(utf8::decode(t))));
  }
  return out;
}

// Token indices covering [begin, end) in characters, or nothing when the
// span does not overlap any token.
std::optional<std::pair<std::size_t, std::size_t>> token_span(const TokenizedText& tokens,
                                                              CharSpan chars) {
  std::optional<std::size_t> first;
  std::size_t last = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& o = tokens.offsets[t];
    if (o.end > chars.begin && o.begin < chars.end) {
      if (!first) first = t;
      last = t;
    }
  }
  if (!first) return std::nullopt;
  return std::make_pair(*first, last);
}

// Fisher-Yates driven by raw mt19937_64 output so the permutation does not
// depend on the standard library's distribution implementations.
void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

void check_toy(const ReaderModel& model) {
  if (model.kind != ReaderKind::Toy) {
    throw ContractError("toy reader given a model of another kind");
  }
}

}  // namespace

TrainConfig ToyReader::default_config() {
  TrainConfig c;
  c.learning_rate = 0.5;
  return c;
}

ReaderModel ToyReader::pretrained(const TrainConfig& config) const {
  return ReaderModel{ReaderKind::Toy, toy::encode_state({}), config};
}

ReaderModel ToyReader::train(const ReaderModel& init, const Dataset& data,
                             const TrainConfig& config) const {
  check_toy(init);
  config.validate();
  if (!data.labeled() && !data.empty()) {
    throw ContractError("toy reader can only train on labeled data");
  }

  const auto max_ctx = static_cast<std::size_t>(config.max_context_tokens);
  const auto stride = static_cast<std::size_t>(config.doc_stride);
  std::vector<Instance> instances;
  for (const auto& q : data.questions()) {
    const auto& ctx = data.context_of(q);
    const auto tokens = tokenize_context(ctx, data.language());
    const auto terms = toy::question_terms(q.text, data.language(),
                                           static_cast<std::size_t>(config.max_question_tokens));
    for (const auto& answer : data.answers_for(q.id)) {
      const CharSpan chars{answer.char_start, answer.char_start + utf8::length(answer.text)};
      const auto span = token_span(tokens.tokens, chars);
      if (!span) continue;
      for (auto s : window_starts(tokens.tokens.size(), max_ctx, stride)) {
        const auto e = std::min(tokens.tokens.size(), s + max_ctx);
        if (span->first < s || span->second >= e) continue;
        Instance inst;
        inst.features = toy::window_features(
            std::span(tokens.lowered).subspan(s, e - s), terms);
        inst.start = span->first - s;
        inst.end = span->second - s;
        instances.push_back(std::move(inst));
        break;
      }
    }
  }
  if (instances.empty()) return init;

  auto w = toy::decode_state(init.state);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(instances.size());
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const auto b_end = std::min(order.size(), b + batch);
      toy::Vec g_start{}, g_end{};
      for (std::size_t i = b; i < b_end; ++i) {
        const auto& inst = instances[order[i]];
        const auto gs = toy::log_likelihood_gradient(w.start, inst.features, inst.start);
        const auto ge = toy::log_likelihood_gradient(w.end, inst.features, inst.end);
        for (std::size_t k = 0; k < toy::kFeatureCount; ++k) {
          g_start[k] += gs[k];
          g_end[k] += ge[k];
        }
      }
      const double step = config.learning_rate / static_cast<double>(b_end - b);
      for (std::size_t k = 0; k < toy::kFeatureCount; ++k) {
        w.start[k] += step * g_start[k];
        w.end[k] += step * g_end[k];
      }
    }
  }
  return ReaderModel{ReaderKind::Toy, toy::encode_state(w), config};
}

SpanDistributions ToyReader::predict(const ReaderModel& model, const Context& context,
                                     const Question& question, Language language) const {
  check_toy(model);
  const auto w = toy::decode_state(model.state);
  const auto& cfg = model.config;
  const auto tokens = tokenize_context(context, language);
  const auto terms = toy::question_terms(question.text, language,
                                         static_cast<std::size_t>(cfg.max_question_tokens));
  const auto max_ctx = static_cast<std::size_t>(cfg.max_context_tokens);

  SpanDistributions out;
  for (auto s : window_starts(tokens.tokens.size(), max_ctx,
                              static_cast<std::size_t>(cfg.doc_stride))) {
    const auto e = std::min(tokens.tokens.size(), s + max_ctx);
    const auto features =
        toy::window_features(std::span(tokens.lowered).subspan(s, e - s), terms);
    SpanWindow window;
    window.token_offsets.assign(tokens.tokens.offsets.begin() + static_cast<std::ptrdiff_t>(s),
                                tokens.tokens.offsets.begin() + static_cast<std::ptrdiff_t>(e));
    window.start_probs = toy::softmax(w.start, features);
    window.end_probs = toy::softmax(w.end, features);
    out.windows.push_back(std::move(window));
  }
  return out;
}

}  // namespace spanforge
