#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radlabel/labels.hpp"
#include "radlabel/random.hpp"
#include "radlabel/reward.hpp"

namespace radlabel::toy {

// Desk-scale GRPO: a softmax policy over a handful of templated completions
// per synthetic report, trained with group-relative advantages from the
// production reward. Finite actions stand in for token-level generation.

enum class FormatKind : std::uint8_t {
  WellFormedEvidential,
  EmptyReasoning,
  RepeatReasoning,
  Tagless,
};

inline constexpr std::array<FormatKind, 4> kAllFormatKinds = {
    FormatKind::WellFormedEvidential, FormatKind::EmptyReasoning, FormatKind::RepeatReasoning,
    FormatKind::Tagless};

std::string_view format_kind_name(FormatKind k) noexcept;

struct CandidateAction {
  LabelSet labels;
  FormatKind format = FormatKind::WellFormedEvidential;
};

struct SyntheticTask {
  std::string report_id;
  LabelSet gold;
  std::vector<CandidateAction> actions;
};

/// Per-disease prevalence of the MIMIC-CXR training split, vocabulary order.
inline constexpr std::array<double, kDiseaseCount> kTrainingPrevalence = {
    0.203, 0.176, 0.035, 0.084, 0.011, 0.031, 0.009, 0.173, 0.201, 0.006, 0.033, 0.025, 0.200};

/// Gold sets draw each disease independently at kTrainingPrevalence. Actions
/// cover {gold, gold plus one wrong label, gold minus one label} crossed with
/// all four format kinds, so a reward-1 action always exists.
std::vector<SyntheticTask> make_synthetic_tasks(std::size_t n, std::uint64_t seed);

/// Completion text for an action: tagged output for the three tagged kinds,
/// free text for Tagless.
std::string materialize_completion(const CandidateAction& action);

class ToyPolicy {
 public:
  /// Zero logits (uniform) for every task.
  explicit ToyPolicy(std::span<const SyntheticTask> tasks, double temperature = 1.0);

  std::size_t task_count() const { return logits_.size(); }
  double temperature() const { return temperature_; }

  std::span<const double> logits(std::size_t task) const { return logits_.at(task); }
  std::vector<double>& mutable_logits(std::size_t task) { return logits_.at(task); }

  /// softmax(logits / temperature)
  std::vector<double> probabilities(std::size_t task) const;

  std::size_t sample(std::size_t task, Rng& rng) const;

  friend bool operator==(const ToyPolicy&, const ToyPolicy&) = default;

 private:
  std::vector<std::vector<double>> logits_;
  double temperature_;
};

struct Rollout {
  std::size_t action = 0;
  std::string completion;
  RewardBreakdown reward;
};

struct RolloutGroup {
  std::size_t task = 0;
  std::vector<Rollout> rollouts;
};

/// Samples `group_size` actions for one task and scores each completion with
/// total_reward against the task's gold labels.
RolloutGroup rollout_group(const ToyPolicy& policy, std::span<const SyntheticTask> tasks,
                           std::size_t task, std::size_t group_size, Rng& rng,
                           const RewardConfig& reward = {});

RolloutGroup rollout_group(const ToyPolicy& policy, std::span<const SyntheticTask> tasks,
                           std::size_t task, std::size_t group_size, std::uint64_t seed,
                           const RewardConfig& reward = {});

/// Score-function update: for each rollout, logits += lr * advantage *
/// d/dlogits log pi(action), with probabilities taken before the step.
/// No KL penalty.
ToyPolicy grpo_step(ToyPolicy policy, std::span<const RolloutGroup> groups, double learning_rate);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t group_size = 8;
  double learning_rate = 0.5;
  std::uint64_t seed = 11;
  double temperature = 1.0;
  RewardConfig reward;
};

/// One entry per epoch, measured on the policy at the start of that epoch.
/// `mean_*`/`format_compliance` are exact expectations under the policy;
/// `sampled_*` are averages over that epoch's rollouts.
struct EpochRecord {
  std::size_t epoch = 0;
  double mean_reward = 0.0;
  double mean_accuracy_reward = 0.0;
  double format_compliance = 0.0;
  double sampled_mean_reward = 0.0;
  double sampled_format_compliance = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  ToyPolicy policy;
};

/// Throws std::invalid_argument for group_size < 2, negative learning rate, or
/// an empty task list.
TrainResult train(std::span<const SyntheticTask> tasks, const TrainConfig& config);

/// Probability mass on the evidential format among the three tagged formats
/// carrying the same labels, averaged over label variants and tasks. 1/3 for
/// a uniform policy.
double evidential_share(const ToyPolicy& policy, std::span<const SyntheticTask> tasks);

nlohmann::json epoch_to_json(const EpochRecord& record);

}  // namespace radlabel::toy
