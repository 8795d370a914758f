#include "spanforge/decoder.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "spanforge/error.hpp"
#include "spanforge/utf8.hpp"

namespace spanforge {
namespace {

// Indices of the k largest entries; equal probabilities favour the lower index.
std::vector<std::size_t> top_k(const std::vector<double>& probs, std::size_t k) {
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return probs[a] != probs[b] ? probs[a] > probs[b] : a < b;
                    });
  idx.resize(k);
  return idx;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size < 1) throw ValidationError("beam_size must be >= 1");
  if (max_answer_tokens < 1) throw ValidationError("max_answer_tokens must be >= 1");
}

void to_json(nlohmann::json& j, const DecodeConfig& c) {
  j = nlohmann::json{{"beam_size", c.beam_size}, {"max_answer_tokens", c.max_answer_tokens}};
}

void from_json(const nlohmann::json& j, DecodeConfig& c) {
  DecodeConfig d;
  c.beam_size = j.value("beam_size", d.beam_size);
  c.max_answer_tokens = j.value("max_answer_tokens", d.max_answer_tokens);
}

std::vector<SpanCandidate> decode(const SpanDistributions& dists, const Context& context,
                                  const DecodeConfig& config) {
  config.validate();
  const auto beam = static_cast<std::size_t>(config.beam_size);
  const auto max_len = static_cast<std::size_t>(config.max_answer_tokens);

  // Windows tile one tokenization, so the sorted union of their offsets
  // recovers global token numbering.
  std::vector<CharSpan> all_tokens;
  for (const auto& w : dists.windows) {
    all_tokens.insert(all_tokens.end(), w.token_offsets.begin(), w.token_offsets.end());
  }
  std::sort(all_tokens.begin(), all_tokens.end());
  all_tokens.erase(std::unique(all_tokens.begin(), all_tokens.end()), all_tokens.end());
  const auto global_index = [&](const CharSpan& span) {
    return static_cast<std::size_t>(
        std::lower_bound(all_tokens.begin(), all_tokens.end(), span) - all_tokens.begin());
  };

  std::map<CharSpan, SpanCandidate> best;
  for (const auto& w : dists.windows) {
    const auto starts = top_k(w.start_probs, beam);
    const auto ends = top_k(w.end_probs, beam);
    for (auto s : starts) {
      for (auto e : ends) {
        if (e < s || e - s + 1 > max_len) continue;
        const double confidence = w.start_probs[s] + w.end_probs[e];
        const CharSpan chars{w.token_offsets[s].begin, w.token_offsets[e].end};
        auto [it, inserted] = best.try_emplace(chars);
        if (inserted || confidence > it->second.confidence) {
          it->second.start_token = global_index(w.token_offsets[s]);
          it->second.end_token = global_index(w.token_offsets[e]);
          it->second.char_span = chars;
          it->second.confidence = confidence;
        }
      }
    }
  }

  std::vector<SpanCandidate> out;
  out.reserve(best.size());
  for (auto& [span, cand] : best) out.push_back(std::move(cand));
  std::sort(out.begin(), out.end(), [](const SpanCandidate& a, const SpanCandidate& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.start_token != b.start_token) return a.start_token < b.start_token;
    return a.end_token < b.end_token;
  });
  if (out.size() > beam) out.resize(beam);

  if (!out.empty()) {
    const auto chars = utf8::decode(context.text);
    for (auto& cand : out) {
      if (cand.char_span.end > chars.size()) {
        throw ValidationError("span distributions do not match context '" + context.id + "'");
      }
      cand.text = utf8::encode(std::u32string_view(chars).substr(
          cand.char_span.begin, cand.char_span.size()));
    }
  }
  return out;
}

std::optional<SpanCandidate> best_answer(std::span<const SpanCandidate> candidates) {
  if (candidates.empty()) return std::nullopt;
  return candidates.front();
}

}  // namespace spanforge
