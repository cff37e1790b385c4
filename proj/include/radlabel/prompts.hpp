#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radlabel/labels.hpp"

namespace radlabel {

enum class TemplateId {
  SftLabelGen,  // label-only generation, used for silver labels
  GrpoInfer,    // reasoning + answer with a worked example
  Summarize,    // consolidate ensemble reasonings
  JudgeGpt,
  JudgeGemini,
};

std::string_view template_name(TemplateId id) noexcept;
std::optional<TemplateId> parse_template_name(std::string_view name);

using PromptExtras = std::map<std::string, std::string, std::less<>>;

/// Substitutes `{name}` placeholders; `{{` and `}}` render as literal braces.
/// Throws PlaceholderError naming the first key with no binding.
std::string render_template(std::string_view body, const PromptExtras& bindings);

/// Placeholder names referenced by a template body, in order of first use.
std::vector<std::string> template_placeholders(std::string_view body);

/// Prompt text assets. The built-in set is compiled from assets/prompts; an
/// operator may point at a directory holding replacement files of the same name.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const std::string& body(TemplateId id) const;

  /// Judge output schema document exactly as shipped (Python-style literals).
  const std::string& judge_schema_text() const { return judge_schema_; }

 private:
  std::map<TemplateId, std::string> bodies_;
  std::string judge_schema_;
};

/// Renders a template for a report. The report text binds to the template's
/// report slot (`{note}` or `{report to analyze}`); `extras` supplies the rest.
std::string render_prompt(TemplateId id, const Report& report, const PromptExtras& extras = {},
                          const PromptLibrary& library = PromptLibrary::builtin());

/// The summarization template generalized to `k` reasonings. For k == 5 this is
/// the shipped asset unchanged; placeholders are `{reason_0}`..`{reason_<k-1>}`.
std::string summarize_template_for(std::size_t k,
                                   const PromptLibrary& library = PromptLibrary::builtin());

namespace detail {
struct EmbeddedAsset {
  const char* name;
  const char* content;
};
const std::vector<EmbeddedAsset>& embedded_assets();
}  // namespace detail

}  // namespace radlabel
