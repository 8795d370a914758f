#include <doctest.h>

#include <random>
#include <set>
#include <string>

#include <json.hpp>

#include "spanforge/pseudo_label.hpp"
#include "spanforge/synthetic.hpp"
#include "spanforge/toy_reader.hpp"
#include "spanforge/utf8.hpp"
#include "support/test_support.hpp"

using namespace spanforge;
using namespace spanforge::testing;

namespace {

// Question A peaks at 0.75 + 0.75 = 1.5; question B is flat over 5 tokens
// so its best pair scores 0.2 + 0.2 = 0.4.
struct TwoQuestionFixture {
  Dataset data;
  std::map<std::string, SpanDistributions> script;

  TwoQuestionFixture() {
    const auto ca = word_context(4, "ca");
    const auto cb = word_context(5, "cb");
    data = Dataset({ca, cb}, {{"A", "ca", "?"}, {"B", "cb", "?"}}, std::nullopt, Language::En);
    script["A"] = {{full_window(ca, {0.05, 0.75, 0.1, 0.1}, {0.05, 0.1, 0.75, 0.1})}};
    script["B"] = {{full_window(cb, {0.2, 0.2, 0.2, 0.2, 0.2}, {0.2, 0.2, 0.2, 0.2, 0.2})}};
  }
};

std::set<std::string> labeled_ids(const PseudoDataset& p) {
  std::set<std::string> out;
  for (const auto& l : p.labels) out.insert(l.question_id);
  return out;
}

}  // namespace

TEST_SUITE("pseudo_label") {

TEST_CASE("hand-built confidences 1.5 and 0.4 at theta 0.7") {
  TwoQuestionFixture f;
  for (const auto& [id, dists] : f.script) {
    const auto oracle = enumerate_spans(dists.windows[0], 30);
    CHECK(oracle[0].confidence == doctest::Approx(id == "A" ? 1.5 : 0.4));
  }
  ScriptedReader reader(f.script);
  const auto p = label(reader, reader.pretrained({}), f.data, 0.7, DecodeConfig{});
  REQUIRE(p.labels.size() == 1);
  CHECK(p.labels[0].question_id == "A");
  CHECK(p.labels[0].answer.text == "w1 w2");
  CHECK(p.labels[0].answer.char_start == 3);
  CHECK(p.labels[0].confidence == doctest::Approx(1.5));
  CHECK(p.below_threshold == 1);
  CHECK(p.no_candidate == 0);
  CHECK(p.skipped() == 1);
}

TEST_CASE("a confidence equal to theta is kept") {
  TwoQuestionFixture f;
  ScriptedReader reader(f.script);
  const double exact_b = 0.2 + 0.2;
  const auto p = label(reader, reader.pretrained({}), f.data, exact_b, DecodeConfig{});
  CHECK(labeled_ids(p) == std::set<std::string>{"A", "B"});
  const auto above = label(reader, reader.pretrained({}), f.data,
                           std::nextafter(exact_b, 1.0), DecodeConfig{});
  CHECK(labeled_ids(above) == std::set<std::string>{"A"});
}

TEST_CASE("theta 0 labels everything and 2.01 nothing") {
  ToyReader reader;
  const auto data = synthetic::cue_corpus({.questions = 30, .seed = 5}).without_answers();
  const auto model = reader.pretrained(ToyReader::default_config());
  CHECK(label(reader, model, data, 0.0, DecodeConfig{}).labels.size() == 30);
  const auto none = label(reader, model, data, 2.01, DecodeConfig{});
  CHECK(none.labels.empty());
  CHECK(none.below_threshold == 30);
}

TEST_CASE("labels are monotone in theta, ordered by id and match their context") {
  ToyReader reader;
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    toy::Weights w;
    for (auto& v : w.start) v = 6.0 * unit(rng) - 3.0;
    for (auto& v : w.end) v = 6.0 * unit(rng) - 3.0;
    const ReaderModel model{ReaderKind::Toy, toy::encode_state(w), ToyReader::default_config()};
    const auto data =
        synthetic::cue_corpus({.questions = 25, .seed = rng()}).without_answers();
    std::set<std::string> previous;
    bool first = true;
    for (double theta : {0.0, 0.3, 0.6, 0.7, 0.9, 1.2, 1.6, 2.0}) {
      const auto p = label(reader, model, data, theta, DecodeConfig{});
      const auto ids = labeled_ids(p);
      if (!first) {
        CHECK(std::includes(previous.begin(), previous.end(), ids.begin(), ids.end()));
      }
      for (std::size_t i = 0; i < p.labels.size(); ++i) {
        const auto& l = p.labels[i];
        CHECK(l.confidence >= theta);
        if (i > 0) CHECK(p.labels[i - 1].question_id < l.question_id);
        const auto& ctx = data.context_of(*data.find_question(l.question_id));
        CHECK(utf8::slice(ctx.text, l.answer.char_start,
                          l.answer.char_start + utf8::length(l.answer.text)) == l.answer.text);
      }
      previous = ids;
      first = false;
    }
  }
}

TEST_CASE("labeling is idempotent and independent of jobs") {
  ToyReader reader;
  const auto data = synthetic::cue_corpus({.questions = 50, .seed = 8});
  const auto cfg = ToyReader::default_config();
  const auto model = reader.train(reader.pretrained(cfg), data, cfg);
  const auto a = label(reader, model, data, 0.7, DecodeConfig{}, {0, 1});
  const auto b = label(reader, model, data, 0.7, DecodeConfig{}, {0, 6});
  CHECK(a.labels == b.labels);
  CHECK(a.sidecar().dump() == b.sidecar().dump());
}

TEST_CASE("gold answers in the target are ignored") {
  ToyReader reader;
  const auto labeled = synthetic::cue_corpus({.questions = 20, .seed = 3});
  const auto model = reader.pretrained(ToyReader::default_config());
  const auto a = label(reader, model, labeled, 0.0, DecodeConfig{});
  const auto b = label(reader, model, labeled.without_answers(), 0.0, DecodeConfig{});
  CHECK(a.labels == b.labels);
}

TEST_CASE("training set and sidecar") {
  TwoQuestionFixture f;
  ScriptedReader reader(f.script);
  auto p = label(reader, reader.pretrained({}), f.data, 0.7, DecodeConfig{}, {2, 1});
  const auto train = p.training_set();
  CHECK(train.labeled());
  CHECK(train.questions().size() == 1);
  CHECK(train.contexts().size() == 1);
  CHECK(train.answers_for("A").front().text == "w1 w2");

  const auto side = p.sidecar();
  CHECK(side["theta"] == 0.7);
  CHECK(side["iteration"] == 2);
  CHECK(side["counts"]["labeled"] == 1);
  CHECK(side["counts"]["skipped"] == 1);
  CHECK(side["confidences"].size() == 1);
  CHECK(side["confidences"]["A"].get<double>() == doctest::Approx(1.5));

  TempDir dir;
  save_pseudo_dataset(p, dir / "pseudo.json", dir / "sidecar.json");
  CHECK(load_squad_json(dir / "pseudo.json", true, Language::En) == train);
  CHECK(nlohmann::json::parse(read_file(dir / "sidecar.json")) == nlohmann::json(side));
}

TEST_CASE("an empty context window counts as no candidate") {
  const Context c{"c", "x", ""};
  const Dataset data({c}, {{"q", "c", "?"}}, std::nullopt, Language::En);
  ScriptedReader reader({{"q", SpanDistributions{}}});
  const auto p = label(reader, reader.pretrained({}), data, 0.0, DecodeConfig{});
  CHECK(p.labels.empty());
  CHECK(p.no_candidate == 1);
  CHECK(p.skipped() == 1);
}

TEST_CASE("negative theta is a contract violation") {
  TwoQuestionFixture f;
  ScriptedReader reader(f.script);
  CHECK_THROWS_AS(label(reader, reader.pretrained({}), f.data, -0.1, DecodeConfig{}),
                  ContractError);
}

}  // TEST_SUITE
