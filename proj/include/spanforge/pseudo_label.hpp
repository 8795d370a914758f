#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanforge/corpus.hpp"
#include "spanforge/decoder.hpp"
#include "spanforge/error.hpp"
#include "spanforge/metrics.hpp"
#include "spanforge/reader.hpp"

namespace spanforge {

struct PseudoLabel {
  std::string question_id;
  AnswerSpan answer;
  double confidence = 0.0;

  friend bool operator==(const PseudoLabel&, const PseudoLabel&) = default;
};

// Confident predictions over an unlabeled dataset. `base` must outlive it.
struct PseudoDataset {
  const Dataset* base = nullptr;
  std::vector<PseudoLabel> labels;  // one per question, ordered by question id
  double theta = 0.0;
  int iteration = 0;
  std::size_t below_threshold = 0;
  std::size_t no_candidate = 0;

  std::size_t skipped() const { return below_threshold + no_candidate; }

  // The labeled subset as a trainable Dataset (unlabeled questions dropped).
  Dataset training_set() const;

  // {"theta", "iteration", "counts": {"labeled", "skipped", "no_candidate"},
  //  "confidences": {question_id: confidence}}
  nlohmann::ordered_json sidecar() const;
};

// A reader failure part-way through labeling.
class LabelingAborted : public TransportError {
 public:
  LabelingAborted(const std::string& what, std::size_t processed, std::size_t labeled)
      : TransportError(what), processed_(processed), labeled_(labeled) {}

  std::size_t processed() const { return processed_; }
  std::size_t labeled() const { return labeled_; }

 private:
  std::size_t processed_;
  std::size_t labeled_;
};

struct LabelOptions {
  int iteration = 0;
  int jobs = 1;
};

// For each question, predict and decode; keep the top candidate when its
// confidence is at least theta. Gold answers in d_t are ignored.
PseudoDataset label(const Reader& reader, const ReaderModel& model, const Dataset& d_t,
                    double theta, const DecodeConfig& decode_config,
                    const LabelOptions& options = {});

// Best answer text per question ("" when nothing decodes).
Predictions predict_answers(const Reader& reader, const ReaderModel& model,
                            const Dataset& data, const DecodeConfig& decode_config,
                            int jobs = 1);

void save_pseudo_dataset(const PseudoDataset& pseudo, const std::filesystem::path& squad_path,
                         const std::filesystem::path& sidecar_path);

}  // namespace spanforge
