#include "spanforge/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "spanforge/analysis.hpp"
#include "spanforge/error.hpp"
#include "spanforge/external_reader.hpp"
#include "spanforge/pseudo_label.hpp"
#include "spanforge/selftrain.hpp"
#include "spanforge/toy_reader.hpp"

namespace spanforge {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string reader = "toy";
  std::string cmd;
  std::string addr;
  std::uint64_t seed = 42;
  int jobs = 0;
  std::string lang = "en";
  std::string korean_f1 = "character";
};

// Training flags that override a base config only when given.
struct TrainFlags {
  CLI::Option* epochs = nullptr;
  CLI::Option* batch = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* max_context = nullptr;
  CLI::Option* max_question = nullptr;
  CLI::Option* stride = nullptr;
  TrainConfig values;

  void add(CLI::App* app) {
    epochs = app->add_option("--epochs", values.epochs, "training passes");
    batch = app->add_option("--batch-size", values.batch_size, "examples per update");
    lr = app->add_option("--lr", values.learning_rate, "learning rate");
    max_context = app->add_option("--max-context", values.max_context_tokens,
                                  "tokens per context window");
    max_question = app->add_option("--max-question", values.max_question_tokens,
                                   "question tokens kept");
    stride = app->add_option("--stride", values.doc_stride, "window stride in tokens");
  }

  TrainConfig apply(TrainConfig base) const {
    if (epochs->count()) base.epochs = values.epochs;
    if (batch->count()) base.batch_size = values.batch_size;
    if (lr->count()) base.learning_rate = values.learning_rate;
    if (max_context->count()) base.max_context_tokens = values.max_context_tokens;
    if (max_question->count()) base.max_question_tokens = values.max_question_tokens;
    if (stride->count()) base.doc_stride = values.doc_stride;
    return base;
  }
};

struct DecodeFlags {
  DecodeConfig values;
  void add(CLI::App* app) {
    app->add_option("--beam", values.beam_size, "candidates kept by the decoder");
    app->add_option("--max-answer", values.max_answer_tokens, "longest answer in tokens");
  }
};

int resolve_jobs(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("SPANFORGE_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("SPANFORGE_JOBS must be a positive integer");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::unique_ptr<Reader> make_reader(const CommonFlags& f) {
  switch (parse_reader_kind(f.reader)) {
    case ReaderKind::Toy:
      return std::make_unique<ToyReader>();
    case ReaderKind::External:
      if (f.cmd.empty() == f.addr.empty()) {
        throw ValidationError("--reader external needs exactly one of --cmd or --addr");
      }
      return std::make_unique<ExternalReader>(f.cmd.empty() ? connect_tcp_transport(f.addr)
                                                            : spawn_process_transport(f.cmd));
  }
  throw ValidationError("unknown reader");
}

TrainConfig default_train_config(ReaderKind kind) {
  return kind == ReaderKind::Toy ? ToyReader::default_config() : TrainConfig{};
}

MetricOptions metric_options(const CommonFlags& f) {
  MetricOptions m;
  if (f.korean_f1 == "character") {
    m.korean = Granularity::Character;
  } else if (f.korean_f1 == "eojeol" || f.korean_f1 == "word") {
    m.korean = Granularity::Word;
  } else {
    throw ValidationError("--korean-f1 must be character or eojeol");
  }
  return m;
}

void check_model_kind(const ReaderModel& m, const Reader& reader) {
  if (m.kind != reader.kind()) {
    throw ValidationError(std::string("checkpoint is for the ") +
                          std::string(reader_kind_name(m.kind)) + " reader but --reader is " +
                          std::string(reader_kind_name(reader.kind())));
  }
}

std::vector<double> parse_thetas(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ValidationError("--thetas must be a comma-separated list of numbers");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("--thetas is empty");
  return out;
}

void print_record(std::ostream& out, const IterationRecord& r) {
  out << "iteration " << r.iteration << ": pseudo-labels " << r.pseudo_label_count;
  if (r.eval) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ", EM %.2f, F1 %.2f", r.eval->em, r.eval->f1);
    out << buf;
  }
  out << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-lingual self-training for extractive question answering", "spanforge"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonFlags common;
  app.add_option("--reader", common.reader, "toy or external")
      ->check(CLI::IsMember({"toy", "external"}));
  app.add_option("--cmd", common.cmd, "command that starts an external reader adapter");
  app.add_option("--addr", common.addr, "host:port of an external reader adapter");
  app.add_option("--seed", common.seed, "seed for all randomness");
  app.add_option("--jobs", common.jobs, "worker threads (default: $SPANFORGE_JOBS or all cores)");

  // finetune
  auto* finetune_cmd = app.add_subcommand("finetune", "train M0 on labeled source data");
  std::string source, out_dir;
  finetune_cmd->add_option("--source", source, "labeled SQuAD JSON")->required();
  finetune_cmd->add_option("--out", out_dir, "output directory")->required();
  finetune_cmd->add_option("--lang", common.lang, "source language");
  TrainFlags finetune_train;
  finetune_train.add(finetune_cmd);

  // selftrain
  auto* selftrain_cmd = app.add_subcommand("selftrain", "self-train M0 on unlabeled target data");
  std::string m0_path, target, eval_path;
  int iters = 3;
  double theta = 0.7;
  selftrain_cmd->add_option("--m0", m0_path, "M0 checkpoint")->required();
  selftrain_cmd->add_option("--target", target, "target SQuAD JSON (answers ignored)")->required();
  selftrain_cmd->add_option("--iters", iters, "self-training iterations");
  selftrain_cmd->add_option("--theta", theta, "confidence threshold");
  selftrain_cmd->add_option("--eval", eval_path, "labeled target dev set");
  selftrain_cmd->add_option("--out", out_dir, "run directory")->required();
  selftrain_cmd->add_option("--lang", common.lang, "target language");
  selftrain_cmd->add_option("--korean-f1", common.korean_f1, "character or eojeol");
  TrainFlags selftrain_train;
  selftrain_train.add(selftrain_cmd);
  DecodeFlags selftrain_decode;
  selftrain_decode.add(selftrain_cmd);

  // label
  auto* label_cmd = app.add_subcommand("label", "pseudo-label a target set with one model");
  std::string model_path, out_file;
  label_cmd->add_option("--model", model_path, "model checkpoint")->required();
  label_cmd->add_option("--target", target, "target SQuAD JSON")->required();
  label_cmd->add_option("--theta", theta, "confidence threshold");
  label_cmd->add_option("--out", out_file, "pseudo-labeled SQuAD JSON")->required();
  label_cmd->add_option("--lang", common.lang, "target language");
  DecodeFlags label_decode;
  label_decode.add(label_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold answers");
  std::string pred_path, gold_path, report_path;
  eval_cmd->add_option("--pred", pred_path, "predictions JSON {id: answer}")->required();
  eval_cmd->add_option("--gold", gold_path, "labeled SQuAD JSON")->required();
  eval_cmd->add_option("--lang", common.lang, "language");
  eval_cmd->add_option("--korean-f1", common.korean_f1, "character or eojeol");
  eval_cmd->add_option("--report", report_path, "write the per-question report here");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "per question/answer type breakdown");
  std::string run_dir, keywords_path, analyze_lang;
  analyze_cmd->add_option("--run", run_dir, "self-training run directory")->required();
  analyze_cmd->add_option("--gold", gold_path, "labeled target dev set")->required();
  analyze_cmd->add_option("--out", out_dir, "write JSON and CSV reports here");
  analyze_cmd->add_option("--keywords", keywords_path, "keyword table JSON");
  analyze_cmd->add_option("--lang", analyze_lang, "language (default: from the run)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "self-train once per confidence threshold");
  std::string thetas_text = "0.5,0.6,0.7,0.8,0.9";
  sweep_cmd->add_option("--m0", m0_path, "M0 checkpoint")->required();
  sweep_cmd->add_option("--target", target, "target SQuAD JSON")->required();
  sweep_cmd->add_option("--gold", gold_path, "labeled target dev set")->required();
  sweep_cmd->add_option("--thetas", thetas_text, "comma-separated thresholds");
  sweep_cmd->add_option("--iters", iters, "self-training iterations");
  sweep_cmd->add_option("--out", out_dir, "sweep directory")->required();
  sweep_cmd->add_option("--lang", common.lang, "target language");
  sweep_cmd->add_option("--korean-f1", common.korean_f1, "character or eojeol");
  TrainFlags sweep_train;
  sweep_train.add(sweep_cmd);
  DecodeFlags sweep_decode;
  sweep_decode.add(sweep_cmd);

  std::vector<std::string> argv_storage(args);
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const bool seed_given = app.get_option("--seed")->count() > 0;

  try {
    const auto lang = parse_language(common.lang);
    const int jobs = resolve_jobs(common.jobs);

    if (*finetune_cmd) {
      auto reader = make_reader(common);
      auto cfg = finetune_train.apply(default_train_config(reader->kind()));
      cfg.seed = common.seed;
      cfg.validate();
      const auto d_s = load_squad_json(source, true, lang);
      const auto m0 = finetune(*reader, reader->pretrained(cfg), d_s, cfg, out_dir);
      nlohmann::ordered_json config;
      config["command"] = "finetune";
      config["reader"] = common.reader;
      config["language"] = language_code(lang);
      config["source_path"] = source;
      config["train_config"] = nlohmann::json(cfg);
      write_file(fs::path(out_dir) / "config.json", config.dump(2) + "\n");
      out << "wrote " << (fs::path(out_dir) / "m0.ckpt").string() << " (" << d_s.questions().size()
          << " questions, digest " << checkpoint_digest(m0) << ")\n";
      return 0;
    }

    if (*selftrain_cmd || *sweep_cmd) {
      auto reader = make_reader(common);
      const auto m0 = load_checkpoint(m0_path);
      check_model_kind(m0, *reader);
      const auto& train = *selftrain_cmd ? selftrain_train : sweep_train;
      const auto& decode = *selftrain_cmd ? selftrain_decode : sweep_decode;
      RunConfig run;
      run.iterations = iters;
      run.theta = theta;
      run.train_config = train.apply(m0.config);
      if (seed_given) run.train_config.seed = common.seed;
      run.decode_config = decode.values;
      run.language = lang;
      run.metric_options = metric_options(common);
      run.reader = common.reader;
      run.target_path = target;
      run.m0_path = m0_path;
      run.run_dir = out_dir;
      run.validate();

      // Gold answers in the target file are never used for training.
      const auto d_t = load_squad_json(target, false, lang);

      if (*selftrain_cmd) {
        std::optional<Dataset> dev;
        if (!eval_path.empty()) {
          dev = load_squad_json(eval_path, true, lang);
          run.eval_path = eval_path;
        }
        const auto result = self_train(*reader, m0, d_t, run, dev ? &*dev : nullptr, jobs);
        for (const auto& r : result.records) print_record(out, r);
        return 0;
      }

      const auto gold = load_squad_json(gold_path, true, lang);
      run.eval_path = gold_path;
      const auto thetas = parse_thetas(thetas_text);
      const auto results = threshold_sweep(*reader, m0, d_t, gold, thetas, run, jobs);
      for (double t : thetas) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "theta %g: EM %.2f, F1 %.2f\n", t, results.at(t).em,
                      results.at(t).f1);
        out << buf;
      }
      return 0;
    }

    if (*label_cmd) {
      auto reader = make_reader(common);
      const auto model = load_checkpoint(model_path);
      check_model_kind(model, *reader);
      if (!(theta >= 0.0)) throw ValidationError("--theta must be non-negative");
      label_decode.values.validate();
      const auto d_t = load_squad_json(target, false, lang);
      const auto pseudo = label(*reader, model, d_t, theta, label_decode.values, {0, jobs});
      fs::path sidecar = out_file;
      sidecar.replace_extension(".sidecar.json");
      save_pseudo_dataset(pseudo, out_file, sidecar);
      out << "labeled " << pseudo.labels.size() << " of " << d_t.questions().size()
          << " questions (" << pseudo.below_threshold << " below threshold, "
          << pseudo.no_candidate << " without a candidate)\n";
      return 0;
    }

    if (*eval_cmd) {
      const auto gold = load_squad_json(gold_path, true, lang);
      const auto preds = load_predictions(pred_path);
      const auto report = evaluate(preds, gold, metric_options(common));
      nlohmann::ordered_json summary;
      summary["em"] = report.em;
      summary["f1"] = report.f1;
      out << summary.dump() << "\n";
      if (report.missing > 0) {
        err << "warning: " << report.missing << " questions have no prediction\n";
      }
      if (!report_path.empty()) write_file(report_path, to_json(report).dump(2) + "\n");
      return 0;
    }

    if (*analyze_cmd) {
      const auto artifacts = RunArtifacts::load(run_dir);
      const auto alang = analyze_lang.empty() ? artifacts.language : parse_language(analyze_lang);
      const auto gold = load_squad_json(gold_path, true, alang);
      const auto keywords = keywords_path.empty() ? KeywordTable::load_default()
                                                  : KeywordTable::load(keywords_path);
      nlohmann::ordered_json report;
      for (auto dim : {BreakdownDimension::Question, BreakdownDimension::Answer}) {
        BreakdownOptions options;
        options.dimension = dim;
        options.keywords = &keywords;
        const auto b = breakdown_report(artifacts, gold, options);
        out << format_table(b) << "\n";
        report[b.dimension] = to_json(b);
        if (!out_dir.empty()) {
          const fs::path dir = out_dir;
          write_file(dir / (b.dimension + "_scatter_zero_shot.csv"), scatter_zero_shot_csv(b));
          write_file(dir / (b.dimension + "_scatter_pseudo_labels.csv"),
                     scatter_pseudo_count_csv(b));
        }
      }
      if (!out_dir.empty()) {
        write_file(fs::path(out_dir) / "analysis.json", report.dump(2) + "\n");
      }
      return 0;
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const TransportError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace spanforge
