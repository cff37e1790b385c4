#include "radlabel/toy_grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "radlabel/response.hpp"

namespace radlabel::toy {
namespace {

constexpr std::array<std::string_view, kDiseaseCount> kEvidence = {
    "bibasilar linear opacities are described as subsegmental atelectasis",
    "the heart size is reported as enlarged",
    "there is focal airspace consolidation in the lower lobe",
    "pulmonary vascular congestion with interstitial edema is noted",
    "the mediastinal contour is described as widened",
    "an old healed rib fracture is mentioned",
    "a nodular lesion is seen in the upper lobe",
    "patchy opacities are noted in the lung base",
    "blunting of the costophrenic angle indicates a pleural effusion",
    "pleural thickening is described",
    "the impression states findings concerning for pneumonia",
    "a small apical pneumothorax is reported",
    "the report mentions an endotracheal tube and a central line",
};

std::string evidential_reasoning(const LabelSet& labels) {
  if (labels.empty()) return "The report describes clear lungs without an acute abnormality.";
  std::string out = "According to the report, ";
  bool first = true;
  for (Disease d : labels.to_vector()) {
    if (!first) out += "; ";
    out += kEvidence[index_of(d)];
    first = false;
  }
  out += ".";
  return out;
}

std::string tagless_text(const LabelSet& labels) {
  if (labels.empty()) return "No findings.";
  std::string out = "Findings:";
  for (Disease d : labels.to_vector()) {
    out += " ";
    out += canonical_name(d);
    out += ".";
  }
  return out;
}

}  // namespace

std::string_view format_kind_name(FormatKind k) noexcept {
  switch (k) {
    case FormatKind::WellFormedEvidential: return "well_formed_evidential";
    case FormatKind::EmptyReasoning: return "empty_reasoning";
    case FormatKind::RepeatReasoning: return "repeat_reasoning";
    case FormatKind::Tagless: return "tagless";
  }
  return "";
}

std::vector<SyntheticTask> make_synthetic_tasks(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SyntheticTask> tasks;
  tasks.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    SyntheticTask task;
    char id[32];
    std::snprintf(id, sizeof id, "synthetic-%05zu", t);
    task.report_id = id;
    for (Disease d : all_diseases()) {
      if (rng.uniform() < kTrainingPrevalence[index_of(d)]) task.gold.insert(d);
    }

    std::vector<LabelSet> variants = {task.gold};
    const std::vector<Disease> absent = (LabelSet::from_bits(~0u) - task.gold).to_vector();
    if (!absent.empty()) {
      LabelSet extra = task.gold;
      extra.insert(absent[rng.index(absent.size())]);
      variants.push_back(extra);
    }
    const std::vector<Disease> present = task.gold.to_vector();
    if (!present.empty()) {
      LabelSet fewer = task.gold;
      fewer.erase(present[rng.index(present.size())]);
      variants.push_back(fewer);
    }
    for (const LabelSet& labels : variants) {
      for (FormatKind k : kAllFormatKinds) task.actions.push_back({labels, k});
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::string materialize_completion(const CandidateAction& action) {
  switch (action.format) {
    case FormatKind::WellFormedEvidential:
      return serialize_response(evidential_reasoning(action.labels), action.labels);
    case FormatKind::EmptyReasoning:
      return serialize_response("", action.labels);
    case FormatKind::RepeatReasoning:
      return serialize_response(action.labels.to_bracket_string(), action.labels);
    case FormatKind::Tagless:
      return tagless_text(action.labels);
  }
  return {};
}

ToyPolicy::ToyPolicy(std::span<const SyntheticTask> tasks, double temperature)
    : temperature_(temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("policy temperature must be positive");
  logits_.reserve(tasks.size());
  for (const auto& t : tasks) {
    if (t.actions.empty()) throw std::invalid_argument("task without candidate actions");
    logits_.emplace_back(t.actions.size(), 0.0);
  }
}

std::vector<double> ToyPolicy::probabilities(std::size_t task) const {
  const auto& z = logits_.at(task);
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - top) / temperature_);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

std::size_t ToyPolicy::sample(std::size_t task, Rng& rng) const {
  const std::vector<double> p = probabilities(task);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

RolloutGroup rollout_group(const ToyPolicy& policy, std::span<const SyntheticTask> tasks,
                           std::size_t task, std::size_t group_size, Rng& rng,
                           const RewardConfig& reward) {
  if (group_size < 2) throw std::invalid_argument("GRPO groups need at least two rollouts");
  const SyntheticTask& t = tasks[task];
  RolloutGroup group;
  group.task = task;
  group.rollouts.reserve(group_size);
  for (std::size_t g = 0; g < group_size; ++g) {
    Rollout r;
    r.action = policy.sample(task, rng);
    r.completion = materialize_completion(t.actions[r.action]);
    r.reward = total_reward(r.completion, t.gold, reward);
    group.rollouts.push_back(std::move(r));
  }
  return group;
}

RolloutGroup rollout_group(const ToyPolicy& policy, std::span<const SyntheticTask> tasks,
                           std::size_t task, std::size_t group_size, std::uint64_t seed,
                           const RewardConfig& reward) {
  Rng rng(seed);
  return rollout_group(policy, tasks, task, group_size, rng, reward);
}

ToyPolicy grpo_step(ToyPolicy policy, std::span<const RolloutGroup> groups, double learning_rate) {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
  for (const RolloutGroup& group : groups) {
    std::vector<double> rewards;
    rewards.reserve(group.rollouts.size());
    for (const auto& r : group.rollouts) rewards.push_back(r.reward.total);
    const std::vector<double> adv = group_advantages(rewards);

    const std::vector<double> p = policy.probabilities(group.task);
    std::vector<double> delta(p.size(), 0.0);
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
      if (adv[i] == 0.0) continue;
      const double scale = learning_rate * adv[i] / policy.temperature();
      for (std::size_t a = 0; a < p.size(); ++a) {
        const double onehot = a == group.rollouts[i].action ? 1.0 : 0.0;
        delta[a] += scale * (onehot - p[a]);
      }
    }
    auto& z = policy.mutable_logits(group.task);
    for (std::size_t a = 0; a < z.size(); ++a) z[a] += delta[a];
  }
  return policy;
}

TrainResult train(std::span<const SyntheticTask> tasks, const TrainConfig& config) {
  if (tasks.empty()) throw std::invalid_argument("training needs at least one task");
  if (config.group_size < 2) throw std::invalid_argument("GRPO groups need at least two rollouts");
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  config.reward.validate();

  // Action rewards are deterministic; score each once for the exact expectations.
  std::vector<std::vector<RewardBreakdown>> action_rewards;
  action_rewards.reserve(tasks.size());
  for (const auto& t : tasks) {
    std::vector<RewardBreakdown> scores;
    for (const auto& a : t.actions) {
      scores.push_back(total_reward(materialize_completion(a), t.gold, config.reward));
    }
    action_rewards.push_back(std::move(scores));
  }

  TrainResult result{{}, ToyPolicy(tasks, config.temperature)};
  Rng rng(config.seed);
  const auto n_tasks = static_cast<double>(tasks.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const std::vector<double> p = result.policy.probabilities(t);
      for (std::size_t a = 0; a < p.size(); ++a) {
        rec.mean_reward += p[a] * action_rewards[t][a].total;
        rec.mean_accuracy_reward += p[a] * action_rewards[t][a].accuracy_reward;
        rec.format_compliance += p[a] * action_rewards[t][a].formatting_reward;
      }
    }
    rec.mean_reward /= n_tasks;
    rec.mean_accuracy_reward /= n_tasks;
    rec.format_compliance /= n_tasks;

    std::vector<RolloutGroup> groups;
    groups.reserve(tasks.size());
    double sampled_reward = 0.0;
    double sampled_format = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      groups.push_back(rollout_group(result.policy, tasks, t, config.group_size, rng, config.reward));
      for (const auto& r : groups.back().rollouts) {
        sampled_reward += r.reward.total;
        sampled_format += r.reward.formatting_reward;
      }
    }
    const double n_rollouts = n_tasks * static_cast<double>(config.group_size);
    rec.sampled_mean_reward = sampled_reward / n_rollouts;
    rec.sampled_format_compliance = sampled_format / n_rollouts;
    result.history.push_back(rec);

    result.policy = grpo_step(std::move(result.policy), groups, config.learning_rate);
  }
  return result;
}

double evidential_share(const ToyPolicy& policy, std::span<const SyntheticTask> tasks) {
  double total = 0.0;
  std::size_t variants = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::vector<double> p = policy.probabilities(t);
    const auto& actions = tasks[t].actions;
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (actions[a].format != FormatKind::WellFormedEvidential) continue;
      double tagged = 0.0;
      for (std::size_t b = 0; b < actions.size(); ++b) {
        if (actions[b].labels == actions[a].labels && actions[b].format != FormatKind::Tagless) {
          tagged += p[b];
        }
      }
      total += p[a] / tagged;
      ++variants;
    }
  }
  return variants == 0 ? 0.0 : total / static_cast<double>(variants);
}

nlohmann::json epoch_to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"mean_reward", r.mean_reward},
          {"mean_accuracy_reward", r.mean_accuracy_reward},
          {"format_compliance", r.format_compliance},
          {"sampled_mean_reward", r.sampled_mean_reward},
          {"sampled_format_compliance", r.sampled_format_compliance}};
}

}  // namespace radlabel::toy
