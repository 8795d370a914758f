#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "spanforge/reader.hpp"

namespace spanforge {

namespace toy {

// Per-token features: [question-term hits in a +-2 token window,
// token-is-a-question-term, relative position, bias].
inline constexpr std::size_t kFeatureCount = 4;
using Vec = std::array<double, kFeatureCount>;

struct Weights {
  Vec start{};
  Vec end{};

  friend bool operator==(const Weights&, const Weights&) = default;
};

std::string encode_state(const Weights& w);
// Throws FormatError.
Weights decode_state(std::string_view state);

// Lowercased question tokens, punctuation-only tokens dropped, truncated to
// max_tokens.
std::unordered_set<std::string> question_terms(std::string_view question, Language lang,
                                               std::size_t max_tokens);

// `tokens` must already be lowercased.
std::vector<Vec> window_features(std::span<const std::string> tokens,
                                 const std::unordered_set<std::string>& terms);

double dot(const Vec& w, const Vec& f);
std::vector<double> softmax(const Vec& w, std::span<const Vec> features);

// log softmax(w . f)[gold] and its gradient with respect to w.
double log_likelihood(const Vec& w, std::span<const Vec> features, std::size_t gold);
Vec log_likelihood_gradient(const Vec& w, std::span<const Vec> features, std::size_t gold);

}  // namespace toy

// Linear span scorer with softmax start/end heads. Training is mini-batch
// gradient ascent on the gold start/end log-likelihood, with example order
// shuffled from config.seed. Everything is double precision and evaluated in
// a fixed order, so identical inputs give bit-identical models.
class ToyReader final : public Reader {
 public:
  // TrainConfig defaults with a learning rate suited to the toy model.
  static TrainConfig default_config();

  ReaderKind kind() const override { return ReaderKind::Toy; }
  ReaderModel pretrained(const TrainConfig& config) const override;
  ReaderModel train(const ReaderModel& init, const Dataset& data,
                    const TrainConfig& config) const override;
  SpanDistributions predict(const ReaderModel& model, const Context& context,
                            const Question& question, Language language) const override;
};

}  // namespace spanforge
