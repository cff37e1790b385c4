#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "radlabel/labels.hpp"
#include "radlabel/response.hpp"

namespace radlabel {

struct RewardConfig {
  double w_acc = 0.8;
  double w_fmt = 0.2;
  /// Off-vocabulary predicted labels count as false positives.
  bool count_unknown_in_precision = true;

  /// Throws std::invalid_argument unless both weights are non-negative and sum to 1.
  void validate() const;
};

struct AccuracyScore {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;  // (precision + recall) / 2
};

struct RewardBreakdown {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy_reward = 0.0;
  double formatting_reward = 0.0;
  double total = 0.0;
  bool well_formed = false;
};

/// Precision/recall of a prediction against gold labels with the empty-set
/// conventions: (empty, empty) scores 1/1; an empty prediction against
/// non-empty gold scores 0/0; any prediction against empty gold scores 0/0.
AccuracyScore accuracy_reward(const RawPrediction& pred, const LabelSet& gold,
                              const RewardConfig& cfg = {});

/// 1 for a well-formed response whose reasoning is neither blank nor a restated
/// label list, otherwise 0.
double formatting_reward(const ParsedResponse& parsed);

/// Parses `completion` and combines both components with the configured
/// weights. Every input text scores; the result is a pure function of its inputs.
RewardBreakdown total_reward(std::string_view completion, const LabelSet& gold,
                             const RewardConfig& cfg = {});

inline constexpr double kAdvantageStdFloor = 1e-4;

/// Group-relative advantages: (r - mean) / max(population std, 1e-4). Groups
/// with identical rewards map to all zeros. Throws std::invalid_argument for
/// fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards);

}  // namespace radlabel
