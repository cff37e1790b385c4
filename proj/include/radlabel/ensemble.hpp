#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radlabel/labels.hpp"
#include "radlabel/llm_client.hpp"
#include "radlabel/prompts.hpp"
#include "radlabel/response.hpp"

namespace radlabel {

struct EnsembleResult {
  std::vector<std::string> raw_completions;  // issue order
  std::vector<ParsedResponse> runs;          // issue order
  LabelSet final_labels;
  std::string summary_reasoning;
  std::array<int, kDiseaseCount> vote_counts{};
};

/// An ensemble run failed; `run_index` is the first failing generation, or -1
/// when summarization failed.
class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(const std::string& what, int run_index)
      : std::runtime_error(what), run_index_(run_index) {}
  int run_index() const noexcept { return run_index_; }

 private:
  int run_index_;
};

/// Keeps every disease named by strictly more than half of the predictions.
/// Throws std::invalid_argument on an empty list.
LabelSet majority_vote(std::span<const LabelSet> predictions);

std::array<int, kDiseaseCount> count_votes(std::span<const LabelSet> predictions);

/// Asks the summarizer to merge the run reasonings into one justification of
/// `final_labels`. Returns "" without any request when every reasoning is blank.
std::string summarize_reasonings(ChatClient& client, std::span<const std::string> reasons,
                                 const LabelSet& final_labels, const GenerationParams& params,
                                 const PromptLibrary& library = PromptLibrary::builtin());

struct EnsembleOptions {
  std::size_t k = 5;
  GenerationParams generation;   // defaults: temperature 0.1, top_p 1
  GenerationParams summarizer;
  /// Upper bound on concurrently issued generations; 1 runs them sequentially.
  std::size_t max_parallel = 1;
};

/// k independent generations of the inference prompt, majority vote, then
/// summary. Any failed generation fails the whole ensemble.
EnsembleResult ensemble_infer(ChatClient& generator, ChatClient& summarizer, const Report& report,
                              const EnsembleOptions& options = {},
                              const PromptLibrary& library = PromptLibrary::builtin());

}  // namespace radlabel
