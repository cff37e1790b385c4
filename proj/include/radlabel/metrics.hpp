#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radlabel/labels.hpp"

namespace radlabel {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ConfusionCounts confusion(const LabelSet& pred, const LabelSet& gold);

/// Zero denominators score 1 for precision and recall; f1 is 0 when p + r = 0.
PrfScore prf_from_counts(const ConfusionCounts& c);

/// Micro-averaged scores over all samples and labels. Throws
/// std::invalid_argument on length mismatch or empty input.
PrfScore micro_prf(std::span<const LabelSet> preds, std::span<const LabelSet> golds);

/// One-vs-rest scores for a single disease. A score is absent when its
/// denominator is zero (rendered as "-").
struct DiseaseScore {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t support = 0;  // gold occurrences
  ConfusionCounts counts;
};

/// Diseases never predicted and never in gold are omitted.
std::map<Disease, DiseaseScore> per_disease_prf(std::span<const LabelSet> preds,
                                                std::span<const LabelSet> golds);

struct MetricSummary {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_boot = 0;
  double level = 0.95;
};

/// Statistic evaluated on a list of sample indices (with repeats).
using SampleStatistic = std::function<double(std::span<const std::size_t>)>;

/// Linear-interpolation quantile of sorted data (numpy's default rule).
double quantile_sorted(std::span<const double> sorted, double q);

/// Percentile bootstrap: `n_boot` resamples of n indices drawn with replacement
/// from Rng(seed); the point estimate uses the identity sample.
MetricSummary bootstrap_ci(const SampleStatistic& stat, std::size_t n, std::size_t n_boot = 1000,
                           double level = 0.95, std::uint64_t seed = 0);

/// Two-sided paired bootstrap p-value for stat_a - stat_b, floored at 1/n_boot
/// and capped at 1.
double paired_bootstrap_test(const SampleStatistic& stat_a, const SampleStatistic& stat_b,
                             std::size_t n, std::size_t n_boot = 1000, std::uint64_t seed = 0);

enum class MicroComponent { Precision, Recall, F1 };

/// Micro precision/recall/F1 over the indexed subset of (preds, golds).
SampleStatistic micro_statistic(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                                MicroComponent component);

/// Share of gold diseases mentioned by the reasoning; undefined for empty gold.
std::optional<double> reasoning_recall(const LabelSet& mentioned, const LabelSet& gold);

/// Share of predicted diseases the reasoning addresses; undefined for an
/// empty prediction.
std::optional<double> reasoning_comprehensiveness(const LabelSet& mentioned,
                                                  const LabelSet& predicted);

/// Cohen's kappa over the flattened (report x disease) binary decisions.
double cohens_kappa(std::span<const LabelSet> a, std::span<const LabelSet> b);

struct ReasoningScores {
  std::optional<double> recall;
  std::optional<double> comprehensiveness;
};

struct ReasoningAggregate {
  MetricSummary recall;
  MetricSummary comprehensiveness;
  std::size_t recall_samples = 0;
  std::size_t comprehensiveness_samples = 0;
};

/// Means over the samples where each metric is defined, with bootstrap CIs.
/// Throws std::invalid_argument when either metric has no defined sample.
ReasoningAggregate aggregate_reasoning(std::span<const ReasoningScores> samples,
                                       std::size_t n_boot = 1000, double level = 0.95,
                                       std::uint64_t seed = 0);

struct EvaluationReport {
  std::size_t n_samples = 0;
  MetricSummary precision;
  MetricSummary recall;
  MetricSummary f1;
  std::map<Disease, DiseaseScore> per_disease;
};

/// Micro P/R/F1 with percentile-bootstrap CIs (one seed, shared by the three
/// components so they resample the same reports) plus per-disease scores.
EvaluationReport evaluate_labels(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                                 std::size_t n_boot = 1000, double level = 0.95,
                                 std::uint64_t seed = 0);

nlohmann::json summary_to_json(const MetricSummary& m);
nlohmann::json evaluation_to_json(const EvaluationReport& report);
std::string render_evaluation_table(const EvaluationReport& report);

}  // namespace radlabel
