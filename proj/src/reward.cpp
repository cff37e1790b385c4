#include "radlabel/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radlabel {

void RewardConfig::validate() const {
  if (!(w_acc >= 0.0) || !(w_fmt >= 0.0)) {
    throw std::invalid_argument("reward weights must be non-negative");
  }
  if (std::abs(w_acc + w_fmt - 1.0) > 1e-12) {
    throw std::invalid_argument("reward weights must sum to 1");
  }
}

AccuracyScore accuracy_reward(const RawPrediction& pred, const LabelSet& gold,
                              const RewardConfig& cfg) {
  const std::size_t unknown = cfg.count_unknown_in_precision ? pred.unknown_labels.size() : 0;
  const std::size_t predicted = pred.canonical.size() + unknown;

  AccuracyScore s;
  if (predicted == 0) {
    s.precision = s.recall = gold.empty() ? 1.0 : 0.0;
  } else if (gold.empty()) {
    s.precision = s.recall = 0.0;
  } else {
    const auto hits = static_cast<double>((pred.canonical & gold).size());
    s.precision = hits / static_cast<double>(predicted);
    s.recall = hits / static_cast<double>(gold.size());
  }
  s.accuracy = (s.precision + s.recall) / 2.0;
  return s;
}

double formatting_reward(const ParsedResponse& parsed) {
  if (!parsed.well_formed) return 0.0;
  return is_reasoning_repeat(parsed.reasoning, parsed.prediction.canonical) ? 0.0 : 1.0;
}

RewardBreakdown total_reward(std::string_view completion, const LabelSet& gold,
                             const RewardConfig& cfg) {
  cfg.validate();
  const ParsedResponse parsed = parse_response(completion);
  const AccuracyScore acc = accuracy_reward(parsed.prediction, gold, cfg);

  RewardBreakdown out;
  out.precision = acc.precision;
  out.recall = acc.recall;
  out.accuracy_reward = acc.accuracy;
  out.formatting_reward = formatting_reward(parsed);
  out.total = cfg.w_acc * out.accuracy_reward + cfg.w_fmt * out.formatting_reward;
  out.well_formed = parsed.well_formed;
  return out;
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("group_advantages needs a group of at least two rewards");
  }
  std::vector<double> out(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); })) {
    return out;
  }

  const auto n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double scale = std::max(std::sqrt(var), kAdvantageStdFloor);

  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / scale;
  return out;
}

}  // namespace radlabel
