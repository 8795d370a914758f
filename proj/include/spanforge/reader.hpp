#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spanforge/corpus.hpp"
#include "spanforge/text.hpp"

namespace spanforge {

// Defaults are the fine-tuning settings used for the neural reader; the toy
// reader needs a much larger learning rate (see ToyReader::default_config).
struct TrainConfig {
  int epochs = 3;
  int batch_size = 32;
  double learning_rate = 5e-5;
  std::uint64_t seed = 42;
  int max_context_tokens = 384;
  int max_question_tokens = 64;
  int doc_stride = 128;

  // Throws ValidationError.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

enum class ReaderKind { Toy, External };

std::string_view reader_kind_name(ReaderKind kind);
ReaderKind parse_reader_kind(std::string_view name);

// A trained (or pre-trained) reader. `state` is opaque to everything except
// the Reader implementation that produced it.
struct ReaderModel {
  ReaderKind kind = ReaderKind::Toy;
  std::string state;
  TrainConfig config;

  friend bool operator==(const ReaderModel&, const ReaderModel&) = default;
};

std::string serialize_model(const ReaderModel& model);
ReaderModel deserialize_model(std::string_view text);
void save_checkpoint(const ReaderModel& model, const std::filesystem::path& path);
ReaderModel load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the serialized checkpoint, as 16 hex digits.
std::string checkpoint_digest(const ReaderModel& model);

struct SpanWindow {
  std::vector<CharSpan> token_offsets;
  std::vector<double> start_probs;
  std::vector<double> end_probs;
};

struct SpanDistributions {
  std::vector<SpanWindow> windows;
};

nlohmann::json to_wire_json(const SpanDistributions& d);
// Throws FormatError on a malformed or invalid payload.
SpanDistributions span_distributions_from_json(const nlohmann::json& j);

// Throws ValidationError unless every window is well-shaped and both
// distributions sum to 1 within `tolerance`.
void check_distributions(const SpanDistributions& d, double tolerance = 1e-6);

// First token of each window over an n-token context: 0, stride, 2*stride, ...
// stopping at the first window that reaches the end. Empty for n == 0.
std::vector<std::size_t> window_starts(std::size_t n_tokens, std::size_t max_tokens,
                                       std::size_t stride);

struct PredictItem {
  const Context* context;
  const Question* question;
};

class Reader {
 public:
  virtual ~Reader() = default;

  virtual ReaderKind kind() const = 0;

  // The untrained starting point that fine-tuning begins from.
  virtual ReaderModel pretrained(const TrainConfig& config) const = 0;

  // Returns a new model; `init` is never modified. `data` must be labeled.
  virtual ReaderModel train(const ReaderModel& init, const Dataset& data,
                            const TrainConfig& config) const = 0;

  virtual SpanDistributions predict(const ReaderModel& model, const Context& context,
                                    const Question& question, Language language) const = 0;

  // Default fans predict() out over `jobs` threads; results keep item order.
  virtual std::vector<SpanDistributions> predict_batch(const ReaderModel& model,
                                                       std::span<const PredictItem> items,
                                                       Language language, int jobs) const;
};

}  // namespace spanforge
