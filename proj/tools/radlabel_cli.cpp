#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "radlabel/dataset.hpp"
#include "radlabel/ensemble.hpp"
#include "radlabel/errors.hpp"
#include "radlabel/judge.hpp"
#include "radlabel/llm_client.hpp"
#include "radlabel/metrics.hpp"
#include "radlabel/response.hpp"
#include "radlabel/reward.hpp"
#include "radlabel/service.hpp"
#include "radlabel/toy_grpo.hpp"
#include "radlabel/version.hpp"

namespace {

using nlohmann::json;
using namespace radlabel;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kTransportError = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void warn(const std::string& msg) { std::cerr << "radlabel: " << msg << '\n'; }

/// Writes to --output when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw DataError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void record(const json& j) { stream() << j.dump() << '\n'; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

json meta(const std::string& command, std::optional<std::uint64_t> seed, json config) {
  return {{"type", "meta"},
          {"tool", "radlabel"},
          {"version", kToolkitVersion},
          {"command", command},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"config", std::move(config)}};
}

json label_names(const LabelSet& s) {
  json out = json::array();
  for (Disease d : s.to_vector()) out.push_back(std::string(canonical_name(d)));
  return out;
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text(const std::string& inline_text, const std::string& path) {
  if (!inline_text.empty()) return inline_text;
  if (!path.empty() && path != "-") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_all(in);
  }
  return read_all(std::cin);
}

/// "[Support Devices, Edema]", "Support Devices,Edema" or "['Edema']".
LabelSet parse_gold_argument(const std::string& text) {
  std::vector<std::string> items;
  split_label_list(text, items);
  LabelSet out;
  for (const auto& item : items) {
    auto d = canonicalize_label(item);
    if (!d) throw DataError("gold label '" + item + "' is not in the vocabulary");
    out.insert(*d);
  }
  return out;
}

struct RewardOptions {
  double w_acc = 0.8;
  double w_fmt = 0.2;
  bool lenient_unknown = false;

  void add(CLI::App* app) {
    app->add_option("--w-acc", w_acc, "Weight of the accuracy reward")->capture_default_str();
    app->add_option("--w-fmt", w_fmt, "Weight of the formatting reward")->capture_default_str();
    app->add_flag("--ignore-unknown-labels", lenient_unknown,
                  "Do not count off-vocabulary predicted labels against precision");
  }
  RewardConfig config() const {
    RewardConfig cfg{w_acc, w_fmt, !lenient_unknown};
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
  json to_json() const {
    return {{"w_acc", w_acc}, {"w_fmt", w_fmt}, {"count_unknown_in_precision", !lenient_unknown}};
  }
};

struct ClientOptions {
  std::string base_url = "http://localhost:8000/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 120.0;
  int max_attempts = 4;
  std::size_t max_in_flight = 4;
  bool no_schema_mode = false;
  std::string transcript;
  double temperature = 0.1;
  double top_p = 1.0;
  int max_tokens = 1024;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--base-url", base_url, "OpenAI-compatible endpoint base URL")
        ->envname("RADLABEL_BASE_URL")
        ->capture_default_str();
    app->add_option("--model", model, "Model name sent with each request")
        ->envname("RADLABEL_MODEL");
    app->add_option("--api-key-env", api_key_env, "Environment variable holding the API key")
        ->capture_default_str();
    app->add_option("--timeout", timeout_s, "Per-request timeout in seconds")->capture_default_str();
    app->add_option("--max-attempts", max_attempts, "Attempts per request, including the first")
        ->capture_default_str();
    app->add_option("--max-in-flight", max_in_flight, "Concurrent request limit")
        ->capture_default_str();
    app->add_flag("--no-schema-mode", no_schema_mode,
                  "Describe output schemas in the prompt instead of sending response_format");
    app->add_option("--transcript", transcript, "Append request/response records to this file");
    app->add_option("--temperature", temperature, "Sampling temperature")->capture_default_str();
    app->add_option("--top-p", top_p, "Nucleus sampling threshold")->capture_default_str();
    app->add_option("--max-tokens", max_tokens, "Completion token limit")->capture_default_str();
    app->add_option("--request-seed", seed, "Seed forwarded to the endpoint, when supported");
  }

  ClientConfig config() const {
    ClientConfig cfg;
    cfg.base_url = base_url;
    cfg.api_key_env = api_key_env;
    cfg.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
    cfg.retry.max_attempts = max_attempts;
    cfg.max_in_flight = max_in_flight;
    cfg.schema_mode = !no_schema_mode;
    if (!transcript.empty()) cfg.transcript_path = transcript;
    cfg.log = [](const std::string& line) { warn(line); };
    return cfg;
  }

  GenerationParams params() const {
    GenerationParams p;
    p.temperature = temperature;
    p.top_p = top_p;
    p.max_tokens = max_tokens;
    p.model_name = model;
    p.seed = seed;
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return p;
  }

  json to_json() const {
    return {{"base_url", base_url},
            {"model", model},
            {"temperature", temperature},
            {"top_p", top_p},
            {"max_tokens", max_tokens},
            {"timeout_s", timeout_s},
            {"max_attempts", max_attempts},
            {"max_in_flight", max_in_flight},
            {"schema_mode", !no_schema_mode},
            {"request_seed", seed ? json(*seed) : json(nullptr)}};
  }
};

/// Pairs predictions with gold reports by id, in gold order.
struct Joined {
  std::vector<const Report*> reports;
  std::vector<const PredictionRecord*> predictions;
};

Joined join_by_id(const std::vector<Report>& gold, const std::vector<PredictionRecord>& preds,
                  const std::string& pred_source) {
  std::unordered_map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : preds) by_id.emplace(p.id, &p);
  Joined out;
  for (const auto& r : gold) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw DataError(pred_source + ": no prediction for report '" + r.id + "'");
    out.reports.push_back(&r);
    out.predictions.push_back(it->second);
  }
  if (preds.size() > gold.size()) {
    warn(std::to_string(preds.size() - gold.size()) +
         " prediction(s) have no matching gold report and are ignored");
  }
  return out;
}

std::vector<LabelSet> gold_sets(const std::vector<const Report*>& reports, const std::string& source) {
  std::vector<LabelSet> out;
  for (const Report* r : reports) {
    if (!r->gold_labels) throw DataError(source + ": report '" + r->id + "' has no gold labels");
    out.push_back(*r->gold_labels);
  }
  return out;
}

std::vector<LabelSet> predicted_sets(const std::vector<const PredictionRecord*>& preds) {
  std::vector<LabelSet> out;
  std::size_t unknown = 0;
  for (const auto* p : preds) {
    out.push_back(p->labels.canonical);
    unknown += p->labels.unknown_labels.size();
  }
  if (unknown > 0) {
    warn(std::to_string(unknown) + " off-vocabulary predicted label(s) ignored by the metrics");
  }
  return out;
}

// ---- subcommands -------------------------------------------------------------

struct ParseCmd {
  std::string completion, file, output;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("parse", "Parse one completion (stdin by default)");
    sub->add_option("--completion", completion, "Completion text");
    sub->add_option("--file", file, "Read the completion from a file");
    sub->add_option("-o,--output", output, "Output file (default stdout)");
  }
  int run() const {
    const ParsedResponse p = parse_response(read_text(completion, file));
    Sink sink(output);
    sink.record(meta("parse", std::nullopt, json::object()));
    sink.record({{"reasoning", p.reasoning},
                 {"labels", label_names(p.prediction.canonical)},
                 {"unknown_labels", p.prediction.unknown_labels},
                 {"has_reasoning_tag", p.has_reasoning_tag},
                 {"has_answer_tag", p.has_answer_tag},
                 {"well_formed", p.well_formed},
                 {"reasoning_is_repeat", is_reasoning_repeat(p.reasoning, p.prediction.canonical)}});
    return kOk;
  }
};

struct RewardCmd {
  std::string completion, file, gold, output;
  RewardOptions reward;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("reward", "Score one completion against gold labels");
    sub->add_option("--completion", completion, "Completion text");
    sub->add_option("--file", file, "Read the completion from a file");
    sub->add_option("--gold", gold, "Gold labels, e.g. \"[Support Devices]\"")->required();
    sub->add_option("-o,--output", output, "Output file (default stdout)");
    reward.add(sub);
  }
  int run() const {
    const RewardConfig cfg = reward.config();
    const LabelSet g = parse_gold_argument(gold);
    const RewardBreakdown r = total_reward(read_text(completion, file), g, cfg);
    Sink sink(output);
    sink.record(meta("reward", std::nullopt, reward.to_json()));
    json rec = reward_to_json(r);
    rec["gold_labels"] = label_names(g);
    sink.record(rec);
    return kOk;
  }
};

struct InferCmd {
  std::string input, output;
  std::size_t k = 5;
  std::size_t max_parallel = 1;
  std::string summarizer_model;
  double summarizer_temperature = 0.1;
  ClientOptions client;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("infer", "Ensemble inference with majority voting");
    sub->add_option("-i,--input", input, "Reports file (JSONL)")->required();
    sub->add_option("-o,--output", output, "Predictions file (default stdout)");
    sub->add_option("--k", k, "Generations per report")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--max-parallel", max_parallel, "Concurrent generations per report")
        ->capture_default_str();
    sub->add_option("--summarizer-model", summarizer_model,
                    "Model for the reasoning summary (default: --model)");
    sub->add_option("--summarizer-temperature", summarizer_temperature)->capture_default_str();
    client.add(sub);
  }
  int run() const {
    const GenerationParams gen = client.params();
    GenerationParams sum = gen;
    sum.temperature = summarizer_temperature;
    if (!summarizer_model.empty()) sum.model_name = summarizer_model;
    const std::vector<Report> reports = load_reports(input);

    HttpChatClient http(client.config());
    EnsembleOptions opts;
    opts.k = k;
    opts.generation = gen;
    opts.summarizer = sum;
    opts.max_parallel = max_parallel;

    json cfg = client.to_json();
    cfg["k"] = k;
    cfg["summarizer_model"] = sum.model_name;
    cfg["summarizer_temperature"] = summarizer_temperature;
    cfg["input"] = input;
    Sink sink(output);
    sink.record(meta("infer", gen.seed, cfg));
    for (const Report& r : reports) {
      const EnsembleResult res = ensemble_infer(http, http, r, opts);
      json votes = json::object();
      for (Disease d : all_diseases()) {
        if (res.vote_counts[index_of(d)] > 0) {
          votes[std::string(canonical_name(d))] = res.vote_counts[index_of(d)];
        }
      }
      json well_formed = json::array();
      for (const auto& run : res.runs) well_formed.push_back(run.well_formed);
      sink.record({{"id", r.id},
                   {"labels", label_names(res.final_labels)},
                   {"reasoning", res.summary_reasoning},
                   {"vote_counts", votes},
                   {"runs", res.raw_completions},
                   {"runs_well_formed", well_formed}});
      sink.stream().flush();
    }
    return kOk;
  }
};

struct EvaluateCmd {
  std::string predictions, gold, output, format = "jsonl";
  std::size_t boot = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("evaluate", "Micro P/R/F1 with bootstrap confidence intervals");
    sub->add_option("-p,--predictions", predictions, "Predictions file (JSONL)")->required();
    sub->add_option("-g,--gold", gold, "Reports with gold labels (JSONL)")->required();
    sub->add_option("-o,--output", output, "Output file (default stdout)");
    sub->add_option("--boot", boot, "Bootstrap resamples")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--level", level, "Confidence level")->capture_default_str()->check(
        CLI::Range(0.0, 1.0));
    sub->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
    sub->add_option("--format", format, "jsonl or table")
        ->capture_default_str()
        ->check(CLI::IsMember({"jsonl", "table"}));
  }
  int run() const {
    const auto reports = load_reports(gold);
    const auto preds = load_predictions(predictions);
    const Joined j = join_by_id(reports, preds, predictions);
    const auto golds = gold_sets(j.reports, gold);
    const auto predicted = predicted_sets(j.predictions);
    const EvaluationReport rep = evaluate_labels(predicted, golds, boot, level, seed);

    const json m = meta("evaluate", seed,
                        {{"predictions", predictions}, {"gold", gold}, {"boot", boot}, {"level", level}});
    Sink sink(output);
    if (format == "table") {
      sink.stream() << "# " << m.dump() << '\n' << render_evaluation_table(rep);
    } else {
      sink.record(m);
      json rec = evaluation_to_json(rep);
      rec["type"] = "metrics";
      sink.record(rec);
    }
    return kOk;
  }
};

struct JudgeCmd {
  std::string reports_path, predictions, output, variant = "gpt";
  std::size_t boot = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  ClientOptions client;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("judge", "Grade reasoning with an LLM judge");
    sub->add_option("-r,--reports", reports_path, "Reports file (JSONL)")->required();
    sub->add_option("-p,--predictions", predictions, "Predictions with reasoning (JSONL)")
        ->required();
    sub->add_option("-o,--output", output, "Judgments file (default stdout)");
    sub->add_option("--variant", variant, "Judge prompt: gpt or gemini")
        ->capture_default_str()
        ->check(CLI::IsMember({"gpt", "gemini"}));
    sub->add_option("--boot", boot, "Bootstrap resamples")->capture_default_str();
    sub->add_option("--level", level, "Confidence level")->capture_default_str();
    sub->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
    client.add(sub);
  }
  int run() const {
    const JudgeVariant v = variant == "gpt" ? JudgeVariant::GptStyle : JudgeVariant::GeminiStyle;
    const GenerationParams params = client.params();
    const auto reports = load_reports(reports_path);
    const auto preds = load_predictions(predictions);
    const Joined j = join_by_id(reports, preds, predictions);

    HttpChatClient http(client.config());
    json cfg = client.to_json();
    cfg["variant"] = variant;
    cfg["boot"] = boot;
    cfg["level"] = level;
    Sink sink(output);
    sink.record(meta("judge", seed, cfg));

    std::vector<ReasoningScores> scores;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < j.reports.size(); ++i) {
      const Report& r = *j.reports[i];
      const PredictionRecord& p = *j.predictions[i];
      const JudgeAssessment a =
          judge_reasoning(http, r, p.reasoning, p.labels.canonical, v, params);
      const ReasoningScores s =
          score_reasoning(a, r.gold_labels.value_or(LabelSet{}), p.labels.canonical);
      if (!r.gold_labels) scores.push_back({std::nullopt, s.comprehensiveness});
      else scores.push_back(s);
      failed += a.parse_failed;

      json rec = serialize_judge_assessment(a);
      rec["type"] = "judgment";
      rec["id"] = r.id;
      rec["variant"] = std::string(judge_variant_name(v));
      rec["mentioned_labels"] = label_names(mentioned_labels(a));
      rec["recall"] = scores.back().recall ? json(*scores.back().recall) : json(nullptr);
      rec["comprehensiveness"] = s.comprehensiveness ? json(*s.comprehensiveness) : json(nullptr);
      rec["parse_failed"] = a.parse_failed;
      rec["dropped_targets"] = a.dropped_targets;
      rec["raw"] = a.raw;
      sink.record(rec);
      sink.stream().flush();
    }
    if (failed > 0) warn(std::to_string(failed) + " judge repl(ies) could not be parsed");

    try {
      const ReasoningAggregate agg = aggregate_reasoning(scores, boot, level, seed);
      sink.record({{"type", "aggregate"},
                   {"variant", std::string(judge_variant_name(v))},
                   {"reasoning_recall", summary_to_json(agg.recall)},
                   {"reasoning_comprehensiveness", summary_to_json(agg.comprehensiveness)},
                   {"recall_samples", agg.recall_samples},
                   {"comprehensiveness_samples", agg.comprehensiveness_samples},
                   {"parse_failures", failed}});
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("cannot aggregate reasoning scores: ") + e.what());
    }
    return kOk;
  }
};

struct StatsCmd {
  std::vector<std::string> inputs, names;
  std::string output, format = "table";

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("stats", "Dataset summary table");
    sub->add_option("-i,--input", inputs, "Reports file(s) with gold labels")->required();
    sub->add_option("--name", names, "Column name per input (default: file name)");
    sub->add_option("-o,--output", output, "Output file (default stdout)");
    sub->add_option("--format", format, "table or jsonl")
        ->capture_default_str()
        ->check(CLI::IsMember({"jsonl", "table"}));
  }
  int run() const {
    if (!names.empty() && names.size() != inputs.size()) {
      throw UsageError("--name must be given once per --input");
    }
    std::vector<std::pair<std::string, DatasetStats>> columns;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::string name =
          names.empty() ? std::filesystem::path(inputs[i]).stem().string() : names[i];
      auto reports = load_reports(inputs[i]);
      try {
        columns.emplace_back(name, dataset_stats(reports));
      } catch (const DataError& e) {
        throw DataError(inputs[i] + ": " + e.what());
      }
    }
    const json m = meta("stats", std::nullopt, {{"inputs", inputs}});
    Sink sink(output);
    if (format == "table") {
      sink.stream() << "# " << m.dump() << '\n' << render_stats_table(columns);
    } else {
      sink.record(m);
      for (const auto& [name, s] : columns) {
        json rec = stats_to_json(s);
        rec["type"] = "stats";
        rec["name"] = name;
        sink.record(rec);
      }
    }
    return kOk;
  }
};

struct LabelCmd {
  std::string input, output, failures;
  ClientOptions client;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("label", "Silver labels from the label-only prompt");
    sub->add_option("-i,--input", input, "Reports file (JSONL)")->required();
    sub->add_option("-o,--output", output, "Labeled reports (default stdout)");
    sub->add_option("--failures", failures, "Failure manifest (default stderr)");
    client.add(sub);
  }
  int run() const {
    const GenerationParams params = client.params();
    const auto reports = load_reports(input);
    HttpChatClient http(client.config());
    const LabelingResult res = bootstrap_labels(http, reports, params);

    json cfg = client.to_json();
    cfg["input"] = input;
    Sink sink(output);
    sink.record(meta("label", params.seed, cfg));
    for (const auto& r : res.reports) sink.record(report_to_json(r));
    for (const auto& w : res.warnings) warn(w);

    if (!res.failures.empty()) {
      Sink manifest(failures);
      std::ostream& fs = failures.empty() ? std::cerr : manifest.stream();
      for (const auto& f : res.failures) {
        fs << json({{"type", "failure"}, {"id", f.report_id}, {"error", f.message}}).dump() << '\n';
      }
      warn(std::to_string(res.failures.size()) + " of " + std::to_string(reports.size()) +
           " report(s) failed");
      if (res.reports.empty()) return kTransportError;
    }
    return kOk;
  }
};

struct SimulateCmd {
  std::size_t tasks = 50;
  std::uint64_t task_seed = 7;
  toy::TrainConfig train;
  RewardOptions reward;
  std::string output;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("simulate", "Desk-scale GRPO on synthetic tasks");
    sub->add_option("--tasks", tasks, "Synthetic tasks")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--task-seed", task_seed, "Seed for task generation")->capture_default_str();
    sub->add_option("--epochs", train.epochs)->capture_default_str();
    sub->add_option("--group-size", train.group_size, "Rollouts per task per epoch (G)")
        ->capture_default_str();
    sub->add_option("--lr", train.learning_rate, "Learning rate")->capture_default_str();
    sub->add_option("--seed", train.seed, "Rollout seed")->capture_default_str();
    sub->add_option("--temperature", train.temperature, "Policy softmax temperature")
        ->capture_default_str();
    sub->add_option("-o,--output", output, "History file (default stdout)");
    reward.add(sub);
  }
  int run() {
    train.reward = reward.config();
    if (train.group_size < 2) throw UsageError("--group-size must be at least 2");
    if (train.learning_rate < 0) throw UsageError("--lr must be non-negative");
    if (!(train.temperature > 0)) throw UsageError("--temperature must be positive");
    const auto task_list = toy::make_synthetic_tasks(tasks, task_seed);
    const toy::TrainResult res = train_policy(task_list);

    json cfg = {{"tasks", tasks},
                {"task_seed", task_seed},
                {"epochs", train.epochs},
                {"group_size", train.group_size},
                {"learning_rate", train.learning_rate},
                {"temperature", train.temperature},
                {"kl_penalty", nullptr},
                {"reward", reward.to_json()}};
    Sink sink(output);
    sink.record(meta("simulate", train.seed, cfg));
    for (const auto& rec : res.history) {
      json j = toy::epoch_to_json(rec);
      j["type"] = "epoch";
      sink.record(j);
    }
    const toy::ToyPolicy initial(task_list, train.temperature);
    sink.record({{"type", "summary"},
                 {"initial_mean_reward", res.history.empty() ? 0.0 : res.history.front().mean_reward},
                 {"final_mean_reward", final_expected_reward(res, task_list)},
                 {"final_format_compliance", final_compliance(res, task_list)},
                 {"initial_evidential_share", toy::evidential_share(initial, task_list)},
                 {"final_evidential_share", toy::evidential_share(res.policy, task_list)}});
    return kOk;
  }

  toy::TrainResult train_policy(const std::vector<toy::SyntheticTask>& task_list) const {
    return toy::train(task_list, train);
  }

  // Exact expectations under the trained policy (the history holds the
  // start-of-epoch values).
  double final_expected_reward(const toy::TrainResult& res,
                               const std::vector<toy::SyntheticTask>& task_list) const {
    return expectation(res, task_list, [](const RewardBreakdown& r) { return r.total; });
  }
  double final_compliance(const toy::TrainResult& res,
                          const std::vector<toy::SyntheticTask>& task_list) const {
    return expectation(res, task_list, [](const RewardBreakdown& r) { return r.formatting_reward; });
  }
  template <class F>
  double expectation(const toy::TrainResult& res, const std::vector<toy::SyntheticTask>& task_list,
                     F field) const {
    double total = 0.0;
    for (std::size_t t = 0; t < task_list.size(); ++t) {
      const auto p = res.policy.probabilities(t);
      for (std::size_t a = 0; a < p.size(); ++a) {
        const auto r = total_reward(toy::materialize_completion(task_list[t].actions[a]),
                                    task_list[t].gold, train.reward);
        total += p[a] * field(r);
      }
    }
    return total / static_cast<double>(task_list.size());
  }
};

struct PlotDataCmd {
  std::string input, output;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("plot-data", "Epoch history from simulate as CSV columns");
    sub->add_option("-i,--input", input, "History file written by simulate")->required();
    sub->add_option("-o,--output", output, "CSV file (default stdout)");
  }
  int run() const {
    std::ifstream in(input);
    if (!in) throw DataError("cannot open " + input);
    static const char* const kColumns[] = {"epoch", "mean_reward", "mean_accuracy_reward",
                                           "format_compliance", "sampled_mean_reward",
                                           "sampled_format_compliance"};
    Sink sink(output);
    std::ostream& out = sink.stream();
    for (std::size_t c = 0; c < std::size(kColumns); ++c) out << (c ? "," : "") << kColumns[c];
    out << '\n';
    std::string line;
    std::size_t line_no = 0, rows = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) {
        throw DataError(input + ":" + std::to_string(line_no) + ": not a JSON object");
      }
      if (rec.value("type", "") != "epoch") continue;
      for (std::size_t c = 0; c < std::size(kColumns); ++c) {
        if (!rec.contains(kColumns[c]) || !rec[kColumns[c]].is_number()) {
          throw DataError(input + ":" + std::to_string(line_no) + ": missing field '" +
                          kColumns[c] + "'");
        }
        out << (c ? "," : "") << rec[kColumns[c]].dump();
      }
      out << '\n';
      ++rows;
    }
    if (rows == 0) throw DataError(input + ": no epoch records");
    return kOk;
  }
};

struct CompareCmd {
  std::string a, b, gold, output, metric = "f1";
  std::size_t boot = 1000;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("compare", "Paired bootstrap test between two prediction files");
    sub->add_option("-a", a, "First predictions file")->required();
    sub->add_option("-b", b, "Second predictions file")->required();
    sub->add_option("-g,--gold", gold, "Reports with gold labels")->required();
    sub->add_option("--metric", metric, "f1, precision or recall")
        ->capture_default_str()
        ->check(CLI::IsMember({"f1", "precision", "recall"}));
    sub->add_option("--boot", boot, "Bootstrap resamples")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
    sub->add_option("-o,--output", output, "Output file (default stdout)");
  }
  int run() const {
    const auto reports = load_reports(gold);
    const auto pa = load_predictions(a);
    const auto pb = load_predictions(b);
    const Joined ja = join_by_id(reports, pa, a);
    const Joined jb = join_by_id(reports, pb, b);
    const auto golds = gold_sets(ja.reports, gold);
    const auto sa = predicted_sets(ja.predictions);
    const auto sb = predicted_sets(jb.predictions);
    const MicroComponent c = metric == "f1"          ? MicroComponent::F1
                             : metric == "precision" ? MicroComponent::Precision
                                                     : MicroComponent::Recall;
    const SampleStatistic stat_a = micro_statistic(sa, golds, c);
    const SampleStatistic stat_b = micro_statistic(sb, golds, c);
    std::vector<std::size_t> identity(golds.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
    const double va = stat_a(identity);
    const double vb = stat_b(identity);
    const double p = paired_bootstrap_test(stat_a, stat_b, golds.size(), boot, seed);

    Sink sink(output);
    sink.record(meta("compare", seed, {{"a", a}, {"b", b}, {"gold", gold}, {"metric", metric},
                                       {"boot", boot}}));
    sink.record({{"type", "comparison"},
                 {"metric", "micro_" + metric},
                 {"a", va},
                 {"b", vb},
                 {"difference", va - vb},
                 {"p_value", p},
                 {"n_samples", golds.size()},
                 {"n_boot", boot}});
    return kOk;
  }
};

struct ServeCmd {
  std::string host = "127.0.0.1";
  int port = 8080;
  RewardOptions reward;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("serve", "Run the reward service");
    sub->add_option("--host", host, "Bind address")->capture_default_str();
    sub->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str()->check(
        CLI::Range(0, 65535));
    reward.add(sub);
  }
  int run() const {
    const RewardConfig cfg = reward.config();
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    RewardServer server(cfg);
    const int bound = server.bind(host, port);
    if (bound < 0) throw DataError("cannot bind " + host + ":" + std::to_string(port));
    json m = meta("serve", std::nullopt, reward.to_json());
    m["listening"] = host + ":" + std::to_string(bound);
    std::cout << m.dump() << std::endl;
    server.start();
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radiology report labeling toolkit: rewards, ensembles, judges, metrics"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);

  ParseCmd parse;
  RewardCmd reward;
  InferCmd infer;
  EvaluateCmd evaluate;
  JudgeCmd judge;
  StatsCmd stats;
  LabelCmd label;
  SimulateCmd simulate;
  PlotDataCmd plot_data;
  CompareCmd compare;
  ServeCmd serve;
  parse.add(app);
  reward.add(app);
  infer.add(app);
  evaluate.add(app);
  judge.add(app);
  stats.add(app);
  label.add(app);
  simulate.add(app);
  plot_data.add(app);
  compare.add(app);
  serve.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "parse") return parse.run();
    if (name == "reward") return reward.run();
    if (name == "infer") return infer.run();
    if (name == "evaluate") return evaluate.run();
    if (name == "judge") return judge.run();
    if (name == "stats") return stats.run();
    if (name == "label") return label.run();
    if (name == "simulate") return simulate.run();
    if (name == "plot-data") return plot_data.run();
    if (name == "compare") return compare.run();
    if (name == "serve") return serve.run();
  } catch (const UsageError& e) {
    warn(e.what());
    return kUsage;
  } catch (const TransportError& e) {
    warn(e.what());
    return kTransportError;
  } catch (const EnsembleError& e) {
    warn(e.what());
    return kTransportError;
  } catch (const DataError& e) {
    warn(e.what());
    return kDataError;
  } catch (const std::exception& e) {
    warn(e.what());
    return kDataError;
  }
  return kUsage;
}
