#include "spanforge/pseudo_label.hpp"

#include <algorithm>
#include <unordered_set>

#include "spanforge/parallel.hpp"

namespace spanforge {
namespace {

constexpr std::size_t kChunk = 256;

// Top candidate per question in dataset order. A reader failure surfaces as
// LabelingAborted, reporting how many questions cleared `theta` so far.
std::vector<std::optional<SpanCandidate>> top_candidates(const Reader& reader,
                                                         const ReaderModel& model,
                                                         const Dataset& data,
                                                         const DecodeConfig& decode_config,
                                                         int jobs, double theta) {
  decode_config.validate();
  const auto& questions = data.questions();
  std::vector<std::optional<SpanCandidate>> out(questions.size());
  for (std::size_t begin = 0; begin < questions.size(); begin += kChunk) {
    const auto end = std::min(questions.size(), begin + kChunk);
    std::vector<PredictItem> items;
    items.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      items.push_back({&data.context_of(questions[i]), &questions[i]});
    }
    std::vector<SpanDistributions> dists;
    try {
      dists = reader.predict_batch(model, items, data.language(), jobs);
    } catch (const TransportError& e) {
      const auto labeled_so_far = [&](std::size_t done) {
        return static_cast<std::size_t>(
            std::count_if(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(done),
                          [&](const auto& c) { return c && c->confidence >= theta; }));
      };
      throw LabelingAborted("labeling aborted after " + std::to_string(begin) + " of " +
                                std::to_string(questions.size()) + " questions (" +
                                std::to_string(labeled_so_far(begin)) +
                                " labeled): " + e.what(),
                            begin, labeled_so_far(begin));
    }
    parallel_for(items.size(), jobs, [&](std::size_t k) {
      const auto candidates = decode(dists[k], *items[k].context, decode_config);
      out[begin + k] = best_answer(candidates);
    });
  }
  return out;
}

}  // namespace

Dataset PseudoDataset::training_set() const {
  if (base == nullptr) throw ContractError("pseudo dataset has no base dataset");
  AnswerMap answers;
  for (const auto& l : labels) answers[l.question_id] = {l.answer};
  std::vector<Question> questions;
  std::unordered_set<std::string> used_contexts;
  for (const auto& q : base->questions()) {
    if (answers.contains(q.id)) {
      questions.push_back(q);
      used_contexts.insert(q.context_id);
    }
  }
  std::vector<Context> contexts;
  for (const auto& c : base->contexts()) {
    if (used_contexts.contains(c.id)) contexts.push_back(c);
  }
  return Dataset(std::move(contexts), std::move(questions), std::move(answers),
                 base->language());
}

nlohmann::ordered_json PseudoDataset::sidecar() const {
  nlohmann::ordered_json j;
  j["theta"] = theta;
  j["iteration"] = iteration;
  j["counts"] = {{"labeled", labels.size()},
                 {"skipped", skipped()},
                 {"no_candidate", no_candidate}};
  auto& conf = j["confidences"] = nlohmann::ordered_json::object();
  for (const auto& l : labels) conf[l.question_id] = l.confidence;
  return j;
}

PseudoDataset label(const Reader& reader, const ReaderModel& model, const Dataset& d_t,
                    double theta, const DecodeConfig& decode_config,
                    const LabelOptions& options) {
  if (!(theta >= 0.0)) throw ContractError("theta must be >= 0");
  PseudoDataset out;
  out.base = &d_t;
  out.theta = theta;
  out.iteration = options.iteration;

  const auto best = top_candidates(reader, model, d_t, decode_config, options.jobs, theta);

  const auto& questions = d_t.questions();
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (!best[i]) {
      ++out.no_candidate;
    } else if (best[i]->confidence >= theta) {
      out.labels.push_back({questions[i].id,
                            AnswerSpan{best[i]->text, best[i]->char_span.begin},
                            best[i]->confidence});
    } else {
      ++out.below_threshold;
    }
  }
  std::sort(out.labels.begin(), out.labels.end(),
            [](const PseudoLabel& a, const PseudoLabel& b) {
              return a.question_id < b.question_id;
            });
  return out;
}

Predictions predict_answers(const Reader& reader, const ReaderModel& model,
                            const Dataset& data, const DecodeConfig& decode_config,
                            int jobs) {
  const auto best = top_candidates(reader, model, data, decode_config, jobs, 0.0);
  Predictions out;
  const auto& questions = data.questions();
  for (std::size_t i = 0; i < questions.size(); ++i) {
    out[questions[i].id] = best[i] ? best[i]->text : std::string();
  }
  return out;
}

void save_pseudo_dataset(const PseudoDataset& pseudo, const std::filesystem::path& squad_path,
                         const std::filesystem::path& sidecar_path) {
  save_squad_json(pseudo.training_set(), squad_path);
  write_file(sidecar_path, pseudo.sidecar().dump(2) + "\n");
}

}  // namespace spanforge
