#include "spanforge/selftrain.hpp"

#include <cmath>
#include <iostream>

#include "spanforge/error.hpp"

namespace spanforge {
namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_file(path, j.dump(2) + "\n");
}

}  // namespace

void RunConfig::validate() const {
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be >= 0");
  train_config.validate();
  decode_config.validate();
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["iterations"] = c.iterations;
  j["theta"] = c.theta;
  j["language"] = language_code(c.language);
  j["korean_f1"] = c.metric_options.korean == Granularity::Character ? "character" : "word";
  j["reader"] = c.reader;
  j["train_config"] = nlohmann::json(c.train_config);
  j["decode_config"] = nlohmann::json(c.decode_config);
  j["source_path"] = c.source_path;
  j["target_path"] = c.target_path;
  j["eval_path"] = c.eval_path;
  j["m0_path"] = c.m0_path;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  try {
    RunConfig c;
    c.iterations = j.at("iterations").get<int>();
    c.theta = j.at("theta").get<double>();
    c.language = parse_language(j.at("language").get<std::string>());
    c.metric_options.korean = j.value("korean_f1", "character") == "word"
                                  ? Granularity::Word
                                  : Granularity::Character;
    c.reader = j.value("reader", "toy");
    c.train_config = j.at("train_config").get<TrainConfig>();
    c.decode_config = j.at("decode_config").get<DecodeConfig>();
    c.source_path = j.value("source_path", "");
    c.target_path = j.value("target_path", "");
    c.eval_path = j.value("eval_path", "");
    c.m0_path = j.value("m0_path", "");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run config: ") + e.what());
  }
}

std::filesystem::path iteration_dir(const std::filesystem::path& run_dir, int iteration) {
  return run_dir / ("iter_" + std::to_string(iteration));
}

ReaderModel finetune(const Reader& reader, const ReaderModel& init, const Dataset& d_s,
                     const TrainConfig& config, const std::filesystem::path& out_dir) {
  if (!d_s.empty() && !d_s.labeled()) {
    throw ContractError("fine-tuning needs a labeled source dataset");
  }
  ReaderModel m0 = init;
  if (d_s.empty()) {
    std::cerr << "warning: source dataset is empty; M0 equals the initial model\n";
  } else {
    m0 = reader.train(init, d_s, config);
  }
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    save_checkpoint(m0, out_dir / "m0.ckpt");
  }
  return m0;
}

SelfTrainResult self_train(const Reader& reader, const ReaderModel& m0, const Dataset& d_t,
                           const RunConfig& run, const Dataset* eval_gold, int jobs) {
  run.validate();
  if (d_t.answers()) throw ContractError("self-training target must be unlabeled");
  if (eval_gold != nullptr && !eval_gold->labeled() && !eval_gold->empty()) {
    throw ContractError("evaluation dataset must be labeled");
  }

  const bool persist = !run.run_dir.empty();
  if (persist) {
    ensure_dir(run.run_dir);
    write_json(run.run_dir / "config.json", to_json(run));
    save_checkpoint(m0, run.run_dir / "m0.ckpt");
  }
  const auto m0_digest = checkpoint_digest(m0);

  SelfTrainResult result;
  const auto finish_iteration = [&](int i, const ReaderModel& model,
                                    const PseudoDataset& pseudo, IterationRecord record) {
    record.iteration = i;
    record.pseudo_label_count = pseudo.labels.size();
    Predictions predictions;
    if (eval_gold != nullptr) {
      predictions = predict_answers(reader, model, *eval_gold, run.decode_config, jobs);
      record.eval = evaluate(predictions, *eval_gold, run.metric_options);
    }
    if (persist) {
      const auto dir = iteration_dir(run.run_dir, i);
      ensure_dir(dir);
      save_pseudo_dataset(pseudo, dir / "pseudo.json", dir / "sidecar.json");
      save_checkpoint(model, dir / "model.ckpt");
      record.model_checkpoint = dir / "model.ckpt";
      if (record.eval) {
        save_predictions(predictions, dir / "predictions.json");
        write_json(dir / "eval.json", to_json(*record.eval));
      }
    }
    result.records.push_back(std::move(record));
  };

  LabelOptions options{0, jobs};
  auto pseudo = label(reader, m0, d_t, run.theta, run.decode_config, options);
  finish_iteration(0, m0, pseudo, {});

  ReaderModel current = m0;
  for (int i = 1; i <= run.iterations; ++i) {
    IterationRecord record;
    if (pseudo.labels.empty()) {
      std::cerr << "warning: iteration " << i
                << ": no pseudo-labels from the previous iteration; keeping M0\n";
      current = m0;
    } else {
      record.train_init_digest = m0_digest;
      record.trained = true;
      current = reader.train(m0, pseudo.training_set(), run.train_config);
    }
    options.iteration = i;
    pseudo = label(reader, current, d_t, run.theta, run.decode_config, options);
    finish_iteration(i, current, pseudo, std::move(record));
  }
  result.final_model = std::move(current);
  return result;
}

}  // namespace spanforge
