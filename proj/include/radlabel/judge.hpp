#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "radlabel/labels.hpp"
#include "radlabel/llm_client.hpp"
#include "radlabel/metrics.hpp"
#include "radlabel/prompts.hpp"

namespace radlabel {

enum class JudgeVariant { GptStyle, GeminiStyle };

std::string_view judge_variant_name(JudgeVariant v) noexcept;

struct JudgedPhrase {
  std::string phrase;
  bool supported_by_report = false;
  std::vector<Disease> target_diseases;  // deduplicated, judge order
};

struct JudgeAssessment {
  std::vector<JudgedPhrase> phrases;
  JudgeVariant variant = JudgeVariant::GptStyle;
  std::string raw;
  bool parse_failed = false;
  std::size_t dropped_targets = 0;     // off-vocabulary target names
  std::size_t malformed_elements = 0;  // entries without a usable phrase
};

struct JudgeRequest {
  std::string prompt;
  nlohmann::json response_format;  // structured-output schema request
};

JudgeRequest build_judge_request(const Report& report, std::string_view reasoning,
                                 const LabelSet& result_list, JudgeVariant variant,
                                 const PromptLibrary& library = PromptLibrary::builtin());

/// The judge output schema as a request `response_format` object.
nlohmann::json judge_response_format(const PromptLibrary& library = PromptLibrary::builtin());

/// Lenient parser for JSON and Python-literal payloads: single-quoted strings,
/// True/False/None, bare keys, trailing commas, and parenthesized remarks
/// between tokens. Throws std::invalid_argument on unrecoverable input.
nlohmann::json parse_lenient_json(std::string_view text);

/// Accepts an object with a "results" array or a bare array. Each element may
/// carry `target_disease` (string) or `target_diseases` (list). Never throws;
/// unusable payloads give an empty assessment with parse_failed set.
JudgeAssessment parse_judge_output(std::string_view raw,
                                   JudgeVariant variant = JudgeVariant::GptStyle);

nlohmann::json serialize_judge_assessment(const JudgeAssessment& assessment);

/// Union of targets over all phrases, whether or not the phrase is supported.
LabelSet mentioned_labels(const JudgeAssessment& assessment);

/// Sends one judge request. Replies that miss the schema are still parsed
/// leniently (and flagged) rather than aborting the evaluation.
JudgeAssessment judge_reasoning(ChatClient& client, const Report& report,
                                std::string_view reasoning, const LabelSet& predicted,
                                JudgeVariant variant, const GenerationParams& params,
                                const PromptLibrary& library = PromptLibrary::builtin());

/// R(y) against the gold labels and C(y) against the predicted labels.
ReasoningScores score_reasoning(const JudgeAssessment& assessment, const LabelSet& gold,
                                const LabelSet& predicted);

}  // namespace radlabel
