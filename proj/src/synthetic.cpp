#include "spanforge/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "spanforge/error.hpp"
#include "spanforge/utf8.hpp"

namespace spanforge::synthetic {
namespace {

constexpr std::string_view kFiller[] = {
    "river", "stone", "north", "market", "winter", "garden", "bridge", "silver",
    "harbor", "village", "forest", "candle", "letter", "window", "mountain", "valley",
    "summer", "painter", "island", "castle", "library", "engine", "orchard", "meadow",
    "lantern", "compass", "harvest", "council", "merchant", "festival", "chapel", "tower",
    "quiet", "ancient", "bright", "narrow", "golden", "distant", "gentle", "heavy",
    "early", "broad", "hidden", "simple", "famous", "rural", "coastal", "eastern",
    "built", "crossed", "opened", "carried", "painted", "visited", "followed", "gathered",
    "walked", "watched", "raised", "founded", "trained", "measured", "traded", "sailed",
    "with", "near", "over", "under", "after", "before", "during", "through",
    "beyond", "along", "inside", "toward", "across", "around", "behind", "within",
    "people", "workers", "farmers", "students", "sailors", "monks", "soldiers", "travelers",
    "often", "later", "again", "still", "finally", "rarely", "slowly", "soon",
    "wheat", "copper", "timber", "cotton", "glass", "paper", "bronze", "marble",
    "season", "century", "decade", "morning", "evening", "journey", "record", "border"};

constexpr std::string_view kCues[] = {
    "alder", "birch", "cedar", "elm", "hazel", "juniper", "larch", "maple",
    "oak", "pine", "rowan", "spruce", "willow", "yew", "aspen", "linden",
    "amber", "basalt", "cobalt", "flint", "garnet", "jasper", "onyx", "quartz",
    "slate", "topaz", "zircon", "agate", "beryl", "coral", "opal", "pearl"};

constexpr std::string_view kAnswers[] = {
    "arden", "belmont", "corwin", "dalton", "everly", "fenwick", "garrick", "holloway",
    "ingram", "jessup", "kendall", "lachlan", "marlowe", "norbury", "oakley", "prescott",
    "quimby", "radley", "sterling", "thorne", "upton", "vance", "whitlock", "yardley",
    "ashby", "barlow", "crandall", "dunmore", "ellery", "fairfax", "gresham", "hartley",
    "ives", "jarrow", "kingsley", "linwood", "merrick", "nash", "orwell", "pembroke",
    "redmond", "sinclair", "tolliver", "underwood", "vickers", "warwick", "yates", "zeller"};

constexpr std::string_view kTemplate[] = {"what", "lies", "between", "and"};

// Raw generator output keeps the distribution identical across standard
// libraries.
struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine() % n); }
  double unit() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  template <typename T, std::size_t N>
  std::string pick(const T (&list)[N]) { return std::string(list[below(N)]); }
};

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty() && w != ".") out.push_back(' ');
    out += w;
  }
  return out;
}

// Filler words with a period roughly every eight words.
std::vector<std::string> filler(Rng& rng, std::size_t n) {
  std::vector<std::string> words;
  std::size_t since_period = 0;
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back(rng.pick(kFiller));
    if (++since_period >= 6 + rng.below(5) && i + 1 < n) {
      words.emplace_back(".");
      since_period = 0;
    }
  }
  words.emplace_back(".");
  return words;
}

std::string invented_word(Rng& rng) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                                 "p", "r", "s", "t", "v", "z", "br", "tr",
                                                 "kl", "sv", "dr", "gr"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ei"};
  std::string w;
  const auto syllables = 2 + rng.below(2);
  for (std::size_t s = 0; s < syllables; ++s) {
    w += rng.pick(kOnsets);
    w += rng.pick(kVowels);
  }
  if (rng.below(2) == 0) w += "n";
  return w;
}

}  // namespace

Dataset cue_corpus(const CueCorpusOptions& o) {
  if (o.min_words < 20 || o.max_words < o.min_words ||
      (o.long_fraction > 0.0 && (o.long_min_words < 20 || o.long_max_words < o.long_min_words))) {
    throw ContractError("cue corpus needs 20 <= min_words <= max_words");
  }
  if (!(o.answer_begin >= 0.0 && o.answer_begin < o.answer_end && o.answer_end <= 1.0)) {
    throw ContractError("cue corpus answer region must satisfy 0 <= begin < end <= 1");
  }
  Rng rng(o.seed);
  std::vector<Context> contexts;
  std::vector<Question> questions;
  AnswerMap answers;
  for (std::size_t i = 0; i < o.questions; ++i) {
    const bool long_context = rng.unit() < o.long_fraction;
    const auto n = long_context
                       ? o.long_min_words + rng.below(o.long_max_words - o.long_min_words + 1)
                       : o.min_words + rng.below(o.max_words - o.min_words + 1);
    const auto cue = rng.pick(kCues);
    auto marker = rng.pick(kCues);
    while (marker == cue) marker = rng.pick(kCues);
    const auto answer = rng.pick(kAnswers);
    const bool hard = rng.unit() < o.hard_fraction;
    const bool near_miss = !hard && rng.unit() < o.near_miss_fraction;

    // Slots are positions in a filler stream where triples are inserted.
    const auto lo = static_cast<std::size_t>(o.answer_begin * static_cast<double>(n));
    const auto hi = std::max(lo + 1, static_cast<std::size_t>(o.answer_end *
                                                              static_cast<double>(n)) - 3);
    const auto answer_slot = lo + rng.below(hi - lo);
    std::vector<std::size_t> decoy_slots;
    if (hard) {
      const auto k = static_cast<std::size_t>(
          o.min_decoys + static_cast<int>(rng.below(static_cast<std::size_t>(
                             o.max_decoys - o.min_decoys + 1))));
      // Decoys need three filler words of separation from each other and
      // from the answer so their features do not overlap.
      std::set<std::size_t> used;
      for (std::size_t tries = 0; decoy_slots.size() < k && tries < 1000; ++tries) {
        if (answer_slot < 4) break;
        const auto s = rng.below(answer_slot - 3);
        bool clear = true;
        for (auto d : decoy_slots) clear = clear && (s + 3 <= d || d + 3 <= s);
        if (clear) decoy_slots.push_back(s);
      }
      std::sort(decoy_slots.begin(), decoy_slots.end());
    }
    std::size_t near_slot = n + 1;
    if (near_miss && answer_slot >= 4) near_slot = rng.below(answer_slot - 3);

    const auto base = filler(rng, n);
    std::vector<std::string> words;
    std::size_t filler_index = 0;
    std::size_t answer_word = 0;
    for (const auto& w : base) {
      if (w != ".") {
        if (std::binary_search(decoy_slots.begin(), decoy_slots.end(), filler_index)) {
          words.push_back(cue);
          auto other = rng.pick(kAnswers);
          while (other == answer) other = rng.pick(kAnswers);
          words.push_back(other);
          words.push_back(marker);
        }
        if (filler_index == near_slot) {
          words.push_back(cue);
          words.push_back(rng.pick(kAnswers));
        }
        if (filler_index == answer_slot) {
          words.push_back(cue);
          answer_word = words.size();
          words.push_back(answer);
          words.push_back(marker);
        }
        ++filler_index;
      }
      words.push_back(w);
    }

    if (o.connective_rate > 0.0) {
      std::vector<std::size_t> terms;
      for (std::size_t w = 0; w < words.size(); ++w) {
        if (words[w] == cue || words[w] == marker) terms.push_back(w);
      }
      const auto far = [&](std::size_t w) {
        for (auto t : terms) {
          if ((w > t ? w - t : t - w) < 5) return false;
        }
        return true;
      };
      for (std::size_t w = 0; w < words.size(); ++w) {
        if (w == answer_word || words[w] == "." || words[w] == cue || words[w] == marker) continue;
        if (rng.unit() < o.connective_rate && far(w)) {
          words[w] = "and";
          terms.push_back(w);
        }
      }
    }

    // Character offset of the answer word.
    std::size_t char_start = 0;
    for (std::size_t w = 0; w < answer_word; ++w) {
      char_start += utf8::length(words[w]);
      if (words[w + 1] != ".") char_start += 1;
    }

    const auto id = "q" + std::to_string(i);
    contexts.push_back({"c" + std::to_string(i), join_words(words), "synthetic"});
    questions.push_back({id, contexts.back().id,
                         "what lies between " + cue + " and " + marker + " ?"});
    answers[id] = {AnswerSpan{answer, char_start}};
  }
  return Dataset(std::move(contexts), std::move(questions), std::move(answers), Language::En);
}

std::vector<std::string> cue_vocabulary() {
  std::set<std::string> words;
  for (auto w : kFiller) words.emplace(w);
  for (auto w : kCues) words.emplace(w);
  for (auto w : kAnswers) words.emplace(w);
  for (auto w : kTemplate) words.emplace(w);
  return {words.begin(), words.end()};
}

Cipher::Cipher(const std::vector<std::string>& vocabulary, double shared_fraction,
               std::uint64_t seed) {
  if (!(shared_fraction >= 0.0 && shared_fraction <= 1.0)) {
    throw ContractError("shared_fraction must lie in [0, 1]");
  }
  std::vector<std::string> words(vocabulary.begin(), vocabulary.end());
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  Rng rng(seed);
  for (std::size_t i = words.size(); i > 1; --i) std::swap(words[i - 1], words[rng.below(i)]);
  const auto shared = static_cast<std::size_t>(shared_fraction * static_cast<double>(words.size()) + 0.5);
  std::set<std::string> taken(vocabulary.begin(), vocabulary.end());
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i < shared) {
      mapping_[words[i]] = words[i];
      continue;
    }
    auto w = invented_word(rng);
    while (taken.contains(w)) w = invented_word(rng);
    taken.insert(w);
    mapping_[words[i]] = w;
  }
}

double Cipher::shared_fraction() const {
  if (mapping_.empty()) return 0.0;
  std::size_t same = 0;
  for (const auto& [from, to] : mapping_) same += from == to;
  return static_cast<double>(same) / static_cast<double>(mapping_.size());
}

std::string Cipher::apply(std::string_view text) const {
  std::string out;
  std::string word;
  const auto flush = [&] {
    if (word.empty()) return;
    const auto it = mapping_.find(word);
    out += it == mapping_.end() ? word : it->second;
    word.clear();
  };
  for (char c : text) {
    if (c == ' ' || c == '.' || c == '?') {
      flush();
      out.push_back(c);
    } else {
      word.push_back(c);
    }
  }
  flush();
  return out;
}

Dataset Cipher::apply(const Dataset& data) const {
  std::vector<Context> contexts;
  for (const auto& c : data.contexts()) contexts.push_back({c.id, apply(c.text), c.title});
  std::vector<Question> questions;
  for (const auto& q : data.questions()) questions.push_back({q.id, q.context_id, apply(q.text)});
  std::optional<AnswerMap> answers;
  if (data.answers()) {
    answers.emplace();
    for (const auto& [qid, spans] : *data.answers()) {
      const auto& q = *data.find_question(qid);
      const auto& ctx = data.context_of(q);
      auto& out = (*answers)[qid];
      for (const auto& a : spans) {
        // The prefix enciphers independently because it ends on a word
        // boundary.
        const auto prefix = utf8::slice(ctx.text, 0, a.char_start);
        out.push_back({apply(a.text), utf8::length(apply(prefix))});
      }
    }
  }
  return Dataset(std::move(contexts), std::move(questions), std::move(answers), data.language());
}

CrossLingualFixture make_fixture(CueCorpusOptions source, CueCorpusOptions target,
                                 std::size_t questions, std::uint64_t seed) {
  source.questions = questions;
  source.seed = seed;
  target.questions = questions;
  target.seed = seed + 1;
  auto dev_options = target;
  dev_options.seed = seed + 2;

  CrossLingualFixture f;
  f.source = cue_corpus(source);
  const auto target_plain = cue_corpus(target);
  const auto dev_plain = cue_corpus(dev_options);
  const Cipher cipher(cue_vocabulary(), 0.3, seed + 3);
  f.target_gold = cipher.apply(target_plain);
  f.target_train = f.target_gold.without_answers();
  f.target_dev = cipher.apply(dev_plain);
  return f;
}

CrossLingualFixture bilingual_cipher_fixture(std::size_t questions, std::uint64_t seed) {
  CueCorpusOptions source;
  source.answer_begin = 0.05;
  source.answer_end = 0.5;
  CueCorpusOptions target;
  target.answer_begin = 0.7;
  target.answer_end = 1.0;
  target.hard_fraction = 0.4;
  target.connective_rate = 0.3;
  return make_fixture(source, target, questions, seed);
}

CrossLingualFixture calibrated_noise_fixture(std::size_t questions, std::uint64_t seed) {
  CueCorpusOptions source;
  source.answer_begin = 0.05;
  source.answer_end = 0.5;
  CueCorpusOptions target;
  target.answer_begin = 0.7;
  target.answer_end = 1.0;
  target.hard_fraction = 0.4;
  target.min_decoys = 2;
  target.connective_rate = 0.3;
  target.long_fraction = 0.4;
  return make_fixture(source, target, questions, seed);
}

}  // namespace spanforge::synthetic
