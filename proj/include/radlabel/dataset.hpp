#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "radlabel/labels.hpp"
#include "radlabel/llm_client.hpp"
#include "radlabel/prompts.hpp"

namespace radlabel {

/// Reads line-delimited records `{"id": ..., "text": ..., "labels": [...]}`;
/// `labels` is optional. Blank lines and `{"type": "meta"}` headers are
/// skipped. Throws DataError naming the line for malformed records, duplicate
/// ids, or off-vocabulary gold labels.
std::vector<Report> read_reports(std::istream& in, const std::string& source = "<stream>");
std::vector<Report> load_reports(const std::filesystem::path& path);

nlohmann::json report_to_json(const Report& report);

/// One line of a predictions file: `{"id", "labels": [...], "reasoning"?}`.
struct PredictionRecord {
  std::string id;
  RawPrediction labels;
  std::string reasoning;
};

/// Off-vocabulary labels are kept in `labels.unknown_labels` rather than
/// rejected; predictions come from models, not annotators.
std::vector<PredictionRecord> read_predictions(std::istream& in,
                                               const std::string& source = "<stream>");
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

nlohmann::json prediction_to_json(const PredictionRecord& record);

struct DatasetStats {
  std::size_t n_reports = 0;
  double avg_length_words = 0.0;  // whitespace-delimited words
  double avg_labels = 0.0;
  std::array<double, kDiseaseCount> prevalence{};
};

/// Throws DataError when the list is empty or a report has no gold labels.
DatasetStats dataset_stats(const std::vector<Report>& reports);

std::size_t count_words(std::string_view text);

nlohmann::json stats_to_json(const DatasetStats& stats);

/// Fixed-width table with one column per named dataset, in the row layout of
/// the usual dataset summary (reports, average length, average labels, then
/// per-disease prevalence).
std::string render_stats_table(const std::vector<std::pair<std::string, DatasetStats>>& columns);

struct LabelingFailure {
  std::string report_id;
  std::string message;
};

struct LabelingResult {
  std::vector<Report> reports;  // successfully labeled, input order
  std::vector<LabelingFailure> failures;
  std::vector<std::string> warnings;  // dropped off-vocabulary labels
};

/// Pulls a label list out of a labeler reply: the `<answer>` block when
/// present, else the first bracketed span, else the whole reply.
RawPrediction extract_label_list(std::string_view reply);

/// Silver labels from the label-only prompt. Off-vocabulary labels are logged
/// and dropped; per-report failures are collected and the run continues.
LabelingResult bootstrap_labels(ChatClient& client, const std::vector<Report>& reports,
                                const GenerationParams& params,
                                const PromptLibrary& library = PromptLibrary::builtin());

/// Seeded uniform sample of n reports without replacement. Throws
/// std::invalid_argument when n exceeds the population.
std::vector<Report> sample_reports(const std::vector<Report>& reports, std::size_t n,
                                   std::uint64_t seed);

}  // namespace radlabel
