#include "radlabel/ensemble.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <future>

#include "radlabel/errors.hpp"

namespace radlabel {
namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

}  // namespace

std::array<int, kDiseaseCount> count_votes(std::span<const LabelSet> predictions) {
  std::array<int, kDiseaseCount> counts{};
  for (const LabelSet& p : predictions) {
    for (Disease d : p.to_vector()) ++counts[index_of(d)];
  }
  return counts;
}

LabelSet majority_vote(std::span<const LabelSet> predictions) {
  if (predictions.empty()) throw std::invalid_argument("majority_vote needs at least one prediction");
  const auto counts = count_votes(predictions);
  const std::size_t k = predictions.size();
  LabelSet out;
  for (Disease d : all_diseases()) {
    if (2 * static_cast<std::size_t>(counts[index_of(d)]) > k) out.insert(d);
  }
  return out;
}

std::string summarize_reasonings(ChatClient& client, std::span<const std::string> reasons,
                                 const LabelSet& final_labels, const GenerationParams& params,
                                 const PromptLibrary& library) {
  if (reasons.empty()) throw std::invalid_argument("summarize_reasonings needs reasonings");
  if (std::all_of(reasons.begin(), reasons.end(), is_blank)) return "";

  PromptExtras extras;
  for (std::size_t i = 0; i < reasons.size(); ++i) {
    extras["reason_" + std::to_string(i)] = reasons[i];
  }
  extras["disease_ensemble"] = final_labels.to_quoted_list();
  const std::string prompt = render_template(summarize_template_for(reasons.size(), library), extras);
  const ChatMessage msg{"user", prompt};
  return client.chat(params, std::span<const ChatMessage>(&msg, 1));
}

EnsembleResult ensemble_infer(ChatClient& generator, ChatClient& summarizer, const Report& report,
                              const EnsembleOptions& options, const PromptLibrary& library) {
  if (options.k < 1) throw std::invalid_argument("ensemble size k must be >= 1");
  const std::string prompt = render_prompt(TemplateId::GrpoInfer, report, {}, library);
  const ChatMessage msg{"user", prompt};
  const std::span<const ChatMessage> messages(&msg, 1);

  EnsembleResult out;
  out.raw_completions.resize(options.k);

  auto fail = [&](std::size_t run, const std::exception& e) -> EnsembleError {
    return EnsembleError("report " + report.id + ": generation " + std::to_string(run + 1) + "/" +
                             std::to_string(options.k) + " failed: " + e.what(),
                         static_cast<int>(run));
  };

  const std::size_t width = std::max<std::size_t>(1, options.max_parallel);
  for (std::size_t start = 0; start < options.k; start += width) {
    const std::size_t stop = std::min(options.k, start + width);
    if (width == 1) {
      try {
        out.raw_completions[start] = generator.chat(options.generation, messages);
      } catch (const std::exception& e) {
        throw fail(start, e);
      }
      continue;
    }
    std::vector<std::future<std::string>> pending;
    for (std::size_t i = start; i < stop; ++i) {
      pending.push_back(std::async(std::launch::async,
                                   [&] { return generator.chat(options.generation, messages); }));
    }
    std::optional<EnsembleError> first_failure;
    for (std::size_t i = start; i < stop; ++i) {
      try {
        out.raw_completions[i] = pending[i - start].get();
      } catch (const std::exception& e) {
        if (!first_failure) first_failure = fail(i, e);
      }
    }
    if (first_failure) throw *first_failure;
  }

  std::vector<LabelSet> predictions;
  std::vector<std::string> reasons;
  for (const std::string& raw : out.raw_completions) {
    out.runs.push_back(parse_response(raw));
    predictions.push_back(out.runs.back().prediction.canonical);
    reasons.push_back(out.runs.back().reasoning);
  }
  out.vote_counts = count_votes(predictions);
  out.final_labels = majority_vote(predictions);

  try {
    out.summary_reasoning =
        summarize_reasonings(summarizer, reasons, out.final_labels, options.summarizer, library);
  } catch (const std::exception& e) {
    throw EnsembleError("report " + report.id + ": summarization failed: " + e.what(), -1);
  }
  return out;
}

}  // namespace radlabel
