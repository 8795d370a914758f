// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spanforge/analysis.hpp"
#include "spanforge/decoder.hpp"
#include "spanforge/metrics.hpp"
#include "spanforge/pseudo_label.hpp"
#include "spanforge/selftrain.hpp"
#include "spanforge/synthetic.hpp"
#include "spanforge/toy_reader.hpp"
#include "support/test_support.hpp"

using namespace spanforge;
using namespace spanforge::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// 1,000 random windows of at most 20 tokens; with beam >= number of valid
// spans, decode must return the exhaustive ranking exactly.
Outcome decoder_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    const bool coarse = trial % 3 == 0;
    const auto ctx = word_context(n);
    SpanDistributions d{{full_window(ctx, random_distribution(rng, n, coarse),
                                     random_distribution(rng, n, coarse))}};
    const std::size_t max_len = trial % 2 == 0 ? 30 : 1 + rng() % n;
    const auto oracle = enumerate_spans(d.windows[0], max_len);
    DecodeConfig cfg;
    cfg.max_answer_tokens = static_cast<int>(max_len);
    cfg.beam_size = static_cast<int>(std::max(oracle.size(), n));
    const auto got = decode(d, ctx, cfg);
    bool same = got.size() == oracle.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].start_token == oracle[i].start && got[i].end_token == oracle[i].end &&
             got[i].confidence == oracle[i].confidence;
    }
    mismatches += !same;
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 5.0,
          std::to_string(1000 - mismatches) + "/1000 rankings identical, " +
              fmt("%.2f s", elapsed) + " (limit 5 s)"};
}

// Committed hand-scored fixture: EM exact, F1 within 1e-9, per pair and per
// language report.
Outcome metrics_oracle() {
  const auto fx =
      nlohmann::json::parse(read_file(SPANFORGE_TEST_DATA_DIR "/metrics_fixture.json"));
  int bad = 0;
  bool abc = false, beijing = false;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_lang;
  for (const auto& p : fx["pairs"]) {
    const auto code = p["lang"].get<std::string>();
    const auto lang = parse_language(code);
    const auto pred = p["prediction"].get<std::string>();
    const auto golds = p["golds"].get<std::vector<std::string>>();
    const double em = exact_match(pred, golds, lang);
    const double f1 = f1_score(pred, golds, lang);
    bad += em != p["em"].get<double>() || std::abs(f1 - p["f1"].get<double>()) > 1e-9;
    abc |= pred == "a b c" && golds == std::vector<std::string>{"b c d"} &&
           std::abs(f1 - 2.0 / 3.0) <= 1e-9;
    beijing |= pred == "北京大学" && golds == std::vector<std::string>{"北京"} &&
               std::abs(f1 - 2.0 / 3.0) <= 1e-9;
    by_lang[code].first.push_back(em);
    by_lang[code].second.push_back(f1);
  }
  int bad_reports = 0;
  for (const auto& [code, scores] : by_lang) {
    const auto lang = parse_language(code);
    const auto report = evaluate(
        load_predictions(std::string(SPANFORGE_TEST_DATA_DIR "/metrics/") + code + "_pred.json"),
        load_squad_json(std::string(SPANFORGE_TEST_DATA_DIR "/metrics/") + code + "_gold.json",
                        true, lang));
    const auto& want = fx["reports"][code];
    bad_reports += std::abs(report.em - want["em"].get<double>()) > 1e-9 ||
                   std::abs(report.f1 - want["f1"].get<double>()) > 1e-9;
  }
  const auto n = fx["pairs"].size();
  return {n == 50 && bad == 0 && bad_reports == 0 && abc && beijing && by_lang.size() == 4,
          std::to_string(n - static_cast<std::size_t>(bad)) + "/" + std::to_string(n) +
              " pairs, " + std::to_string(by_lang.size() - static_cast<std::size_t>(bad_reports)) +
              "/4 language reports, 2/3 cases present: " + (abc && beijing ? "yes" : "no")};
}

// 100 random (model, data) pairs: label sets shrink as theta grows, theta 0
// labels every decodable question and theta 2.01 nothing.
Outcome monotonicity() {
  ToyReader reader;
  std::mt19937_64 rng(99);
  int violations = 0;
  std::size_t undecodable = 0, questions = 0;
  for (int trial = 0; trial < 100; ++trial) {
    toy::Weights w;
    for (auto& v : w.start) v = 8.0 * unit(rng) - 4.0;
    for (auto& v : w.end) v = 8.0 * unit(rng) - 4.0;
    const ReaderModel model{ReaderKind::Toy, toy::encode_state(w), ToyReader::default_config()};
    synthetic::CueCorpusOptions opts;
    opts.questions = 10 + rng() % 20;
    opts.seed = rng();
    opts.hard_fraction = unit(rng);
    opts.min_decoys = 1;
    opts.max_decoys = 4;
    const auto data = synthetic::cue_corpus(opts).without_answers();

    std::vector<double> grid = {0.0, 2.01};
    for (int k = 0; k < 10; ++k) grid.push_back(2.0 * unit(rng));
    std::sort(grid.begin(), grid.end());
    std::map<std::string, PseudoLabel> previous;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto p = label(reader, model, data, grid[g], DecodeConfig{}, {0, 1});
      std::map<std::string, PseudoLabel> current;
      for (const auto& l : p.labels) current[l.question_id] = l;
      // Questions where beam search finds no valid span cannot be labeled at
      // any theta; everything else must be labeled at theta 0.
      if (grid[g] == 0.0) {
        violations += p.below_threshold != 0 ||
                      current.size() + p.no_candidate != data.questions().size();
        undecodable += p.no_candidate;
        questions += data.questions().size();
      }
      if (grid[g] == 2.01) violations += !current.empty();
      if (g > 0) {
        for (const auto& [id, l] : current) {
          const auto it = previous.find(id);
          violations += it == previous.end() || !(it->second == l);
        }
      }
      previous = std::move(current);
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 100 fixtures (" +
                                std::to_string(questions - undecodable) + "/" +
                                std::to_string(questions) + " questions decodable)"};
}

// Every iteration trains from M0, and N = 0 returns M0 unchanged.
Outcome algorithm_one() {
  const auto fx = synthetic::bilingual_cipher_fixture(150, 42);
  ToyReader toy;
  const auto cfg = ToyReader::default_config();
  const auto m0 = toy.train(toy.pretrained(cfg), fx.source, cfg);
  const auto m0_digest = checkpoint_digest(m0);

  RunConfig run;
  run.iterations = 3;
  run.theta = 0.7;
  run.train_config = cfg;
  RecordingReader recorder(toy);
  const auto result = self_train(recorder, m0, fx.target_train, run, nullptr, jobs());
  const auto digests = recorder.init_digests();
  bool all_m0 = digests.size() == 3;
  for (const auto& d : digests) all_m0 = all_m0 && d == m0_digest;
  // The later models differ from each other, so a chained run would have
  // produced different digests.
  const bool distinct = checkpoint_digest(result.final_model) != m0_digest;

  run.iterations = 0;
  RecordingReader idle(toy);
  const auto zero = self_train(idle, m0, fx.target_train, run, nullptr, jobs());
  const bool n0 = zero.final_model == m0 && checkpoint_digest(zero.final_model) == m0_digest &&
                  zero.records.size() == 1 && idle.init_digests().empty();
  return {all_m0 && distinct && n0,
          std::to_string(std::count(digests.begin(), digests.end(), m0_digest)) +
              "/3 train calls started from M0 " + m0_digest + ", N=0 returns M0: " +
              (n0 ? "yes" : "no")};
}

// Bilingual cipher fixture, theta 0.7, seed 42: F1 at iteration 3 at least 5
// points above zero-shot, whole pipeline under 2 minutes.
Outcome end_to_end_gain() {
  const auto start = Clock::now();
  const auto fx = synthetic::bilingual_cipher_fixture(500, 42);
  ToyReader toy;
  const auto cfg = ToyReader::default_config();
  const auto m0 = finetune(toy, toy.pretrained(cfg), fx.source, cfg);
  RunConfig run;
  run.iterations = 3;
  run.theta = 0.7;
  run.train_config = cfg;
  const auto result = self_train(toy, m0, fx.target_train, run, &fx.target_dev, jobs());
  const double elapsed = seconds_since(start);
  const double zero = result.records.front().eval->f1;
  const double last = result.records.back().eval->f1;
  std::string per_iter;
  for (const auto& r : result.records) per_iter += (per_iter.empty() ? "" : " ") + fmt("%.2f", r.eval->f1);
  return {last - zero >= 5.0 && elapsed < 120.0,
          "F1 per iteration [" + per_iter + "], gain " + fmt("%.2f", last - zero) +
              " (need >= 5), " + fmt("%.1f s", elapsed) + " (limit 120 s)"};
}

// Calibrated-noise fixture, one self-training round per theta: the F1 curve
// rises then falls with its maximum inside the grid, and the theta that
// maximises (correct - wrong) zero-shot pseudo-labels is among the best.
Outcome sweep_shape() {
  const auto fx = synthetic::calibrated_noise_fixture(500, 7);
  ToyReader toy;
  const auto cfg = ToyReader::default_config();
  const auto m0 = toy.train(toy.pretrained(cfg), fx.source, cfg);
  const std::vector<double> grid = {0.5, 0.6, 0.7, 0.8, 0.9};
  RunConfig run;
  run.iterations = 1;
  run.train_config = cfg;
  const auto sweep = threshold_sweep(toy, m0, fx.target_train, fx.target_dev, grid, run, jobs());

  std::vector<double> f1;
  for (double t : grid) f1.push_back(sweep.at(t).f1);
  const double best = *std::max_element(f1.begin(), f1.end());
  // Unimodal: non-decreasing up to the first maximum, non-increasing after.
  const auto peak = static_cast<std::size_t>(std::max_element(f1.begin(), f1.end()) - f1.begin());
  bool unimodal = true;
  for (std::size_t i = 1; i < f1.size(); ++i) {
    if (i <= peak && f1[i] < f1[i - 1]) unimodal = false;
    if (i > peak && f1[i] > f1[i - 1]) unimodal = false;
  }
  const bool interior = best > f1.front() && best > f1.back();

  // Label-precision simulation from the gold target answers.
  const auto d0 = label(toy, m0, fx.target_train, 0.0, DecodeConfig{}, {0, jobs()});
  std::vector<long> net;
  std::string sim;
  for (double t : grid) {
    long correct = 0, wrong = 0;
    for (const auto& l : d0.labels) {
      if (l.confidence < t) continue;
      std::vector<std::string> golds;
      for (const auto& a : fx.target_gold.answers_for(l.question_id)) golds.push_back(a.text);
      (exact_match(l.answer.text, golds, Language::En) == 1.0 ? correct : wrong)++;
    }
    net.push_back(correct - wrong);
    sim += (sim.empty() ? "" : " ") + std::to_string(correct) + "/" + std::to_string(wrong);
  }
  const auto predicted =
      static_cast<std::size_t>(std::max_element(net.begin(), net.end()) - net.begin());
  const bool peak_matches = f1[predicted] == best;

  std::string curve;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    curve += (curve.empty() ? "" : " ") + fmt("%.1f:", grid[i]) + fmt("%.2f", f1[i]);
  }
  return {unimodal && interior && peak_matches,
          "F1 [" + curve + "], unimodal " + (unimodal ? "yes" : "no") + ", interior max " +
              (interior ? "yes" : "no") + ", correct/wrong D0 labels [" + sim +
              "] predict theta " + fmt("%.1f", grid[predicted]) +
              (peak_matches ? " (a maximiser)" : " (not a maximiser)")};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

// Two identical `spanforge selftrain` invocations, run through the real
// binary with different thread counts, must produce identical directories.
Outcome determinism() {
  TempDir dir;
  const auto fx = synthetic::bilingual_cipher_fixture(200, 42);
  save_squad_json(fx.source, dir / "source.json");
  save_squad_json(fx.target_train, dir / "target.json");
  save_squad_json(fx.target_dev, dir / "dev.json");
  const std::string cli = SPANFORGE_CLI;
  const auto quiet = " > " + (dir / "log.txt").string() + " 2>&1";
  if (std::system((cli + " finetune --source " + (dir / "source.json").string() + " --out " +
                   (dir / "m0").string() + quiet)
                      .c_str()) != 0) {
    return {false, "finetune failed"};
  }
  const auto selftrain = [&](const std::string& out, int threads) {
    return std::system((cli + " selftrain --m0 " + (dir / "m0" / "m0.ckpt").string() +
                        " --target " + (dir / "target.json").string() + " --eval " +
                        (dir / "dev.json").string() + " --iters 3 --theta 0.7 --jobs " +
                        std::to_string(threads) + " --out " + (dir / out).string() + quiet)
                           .c_str());
  };
  if (selftrain("run_a", 1) != 0 || selftrain("run_b", 4) != 0) {
    return {false, "selftrain failed"};
  }
  const auto a = tree(dir / "run_a");
  const auto b = tree(dir / "run_b");
  std::size_t bytes = 0;
  for (const auto& [name, contents] : a) bytes += contents.size();
  return {a == b && a.size() == 2 + 4 * 5,
          std::to_string(a.size()) + " files, " + std::to_string(bytes) + " bytes, " +
              (a == b ? "byte-identical" : "different")};
}

// Analytic vs central-difference gradients on 50 random instances.
Outcome gradient_check() {
  std::mt19937_64 rng(50);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) worst = std::max(worst, gradient_check_error(rng));
  return {worst < 1e-4, "max relative error " + fmt("%.3g", worst) + " (limit 1e-4)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"decoder oracle equivalence", decoder_oracle},
      {"metrics oracle fixture", metrics_oracle},
      {"pseudo-label monotonicity", monotonicity},
      {"retrain-from-M0 semantics", algorithm_one},
      {"end-to-end self-training gain", end_to_end_gain},
      {"threshold sweep shape", sweep_shape},
      {"run determinism", determinism},
      {"toy reader gradient check", gradient_check},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
