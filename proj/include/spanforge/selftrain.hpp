#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanforge/corpus.hpp"
#include "spanforge/decoder.hpp"
#include "spanforge/metrics.hpp"
#include "spanforge/pseudo_label.hpp"
#include "spanforge/reader.hpp"

namespace spanforge {

struct RunConfig {
  int iterations = 3;
  double theta = 0.7;
  TrainConfig train_config;
  DecodeConfig decode_config;
  Language language = Language::En;
  MetricOptions metric_options;
  // Provenance only; the run itself takes datasets and models directly.
  std::string reader = "toy";
  std::string source_path;
  std::string target_path;
  std::string eval_path;
  std::string m0_path;
  // Where artifacts go; empty keeps the run in memory. Not written to
  // config.json so that identical runs produce identical directories.
  std::filesystem::path run_dir;

  // Throws ValidationError.
  void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

struct IterationRecord {
  int iteration = 0;
  std::size_t pseudo_label_count = 0;
  std::optional<EvalReport> eval;
  std::filesystem::path model_checkpoint;
  // Digest of the model handed to train(); empty when nothing was trained.
  std::string train_init_digest;
  bool trained = false;
};

struct SelfTrainResult {
  ReaderModel final_model;
  std::vector<IterationRecord> records;
};

// Fine-tuning stage: M0 = train(init, d_s). An empty d_s returns init with a
// warning. Writes <out_dir>/m0.ckpt when out_dir is non-empty.
ReaderModel finetune(const Reader& reader, const ReaderModel& init, const Dataset& d_s,
                     const TrainConfig& config, const std::filesystem::path& out_dir = {});

// Self-training stage. D0 = label(M0); then for i = 1..N,
// M_i = train(M0, D_{i-1}) and D_i = label(M_i). Every iteration restarts from
// M0. When D_{i-1} is empty the iteration keeps M_i = M0. Each model is
// evaluated on eval_gold when given.
//
// Run directory layout:
//   config.json, m0.ckpt,
//   iter_<i>/{pseudo.json, sidecar.json, model.ckpt, predictions.json, eval.json}
SelfTrainResult self_train(const Reader& reader, const ReaderModel& m0, const Dataset& d_t,
                           const RunConfig& run, const Dataset* eval_gold = nullptr,
                           int jobs = 1);

std::filesystem::path iteration_dir(const std::filesystem::path& run_dir, int iteration);

}  // namespace spanforge
