#include "radlabel/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "radlabel/errors.hpp"

namespace radlabel {
namespace {

constexpr std::string_view kSchemaAsset = "judge_schema.json";

std::string asset_file_name(TemplateId id) {
  return std::string(template_name(id)) + ".txt";
}

// Asset files end with one newline that is not part of the prompt.
std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

constexpr TemplateId kAllTemplates[] = {TemplateId::SftLabelGen, TemplateId::GrpoInfer,
                                        TemplateId::Summarize, TemplateId::JudgeGpt,
                                        TemplateId::JudgeGemini};

std::string number_word(std::size_t k) {
  static const char* words[] = {"zero", "one", "two",   "three", "four", "five",
                                "six",  "seven", "eight", "nine",  "ten"};
  return k < std::size(words) ? words[k] : std::to_string(k);
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string_view template_name(TemplateId id) noexcept {
  switch (id) {
    case TemplateId::SftLabelGen: return "sft_label_gen";
    case TemplateId::GrpoInfer: return "grpo_infer";
    case TemplateId::Summarize: return "summarize";
    case TemplateId::JudgeGpt: return "judge_gpt";
    case TemplateId::JudgeGemini: return "judge_gemini";
  }
  return "";
}

std::optional<TemplateId> parse_template_name(std::string_view name) {
  for (TemplateId id : kAllTemplates) {
    if (template_name(id) == name) return id;
  }
  return std::nullopt;
}

std::string render_template(std::string_view body, const PromptExtras& bindings) {
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c == '{') {
      if (i + 1 < body.size() && body[i + 1] == '{') {
        out.push_back('{');
        i += 2;
        continue;
      }
      std::size_t close = body.find('}', i + 1);
      std::size_t reopen = body.find('{', i + 1);
      if (close == std::string_view::npos || (reopen != std::string_view::npos && reopen < close)) {
        out.push_back(c);  // stray brace, kept literally
        ++i;
        continue;
      }
      std::string_view key = body.substr(i + 1, close - i - 1);
      auto it = bindings.find(key);
      if (it == bindings.end()) throw PlaceholderError(std::string(key));
      out += it->second;
      i = close + 1;
    } else if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      out.push_back('}');
      i += 2;
    } else {
      out.push_back(c);
      ++i;
    }
  }
  return out;
}

std::vector<std::string> template_placeholders(std::string_view body) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    if (i + 1 < body.size() && body[i + 1] == '{') {
      ++i;
      continue;
    }
    std::size_t close = body.find('}', i + 1);
    std::size_t reopen = body.find('{', i + 1);
    if (close == std::string_view::npos || (reopen != std::string_view::npos && reopen < close)) {
      continue;
    }
    std::string key(body.substr(i + 1, close - i - 1));
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
    i = close;
  }
  return out;
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = [] {
    PromptLibrary l;
    for (const auto& asset : detail::embedded_assets()) {
      std::string_view name = asset.name;
      if (name == kSchemaAsset) {
        l.judge_schema_ = strip_final_newline(asset.content);
        continue;
      }
      for (TemplateId id : kAllTemplates) {
        if (name == asset_file_name(id)) l.bodies_[id] = strip_final_newline(asset.content);
      }
    }
    return l;
  }();
  return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  PromptLibrary l = builtin();
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return strip_final_newline(ss.str());
  };
  for (TemplateId id : kAllTemplates) {
    auto p = dir / asset_file_name(id);
    if (std::filesystem::exists(p)) l.bodies_[id] = read(p);
  }
  if (auto p = dir / kSchemaAsset; std::filesystem::exists(p)) l.judge_schema_ = read(p);
  return l;
}

const std::string& PromptLibrary::body(TemplateId id) const { return bodies_.at(id); }

std::string render_prompt(TemplateId id, const Report& report, const PromptExtras& extras,
                          const PromptLibrary& library) {
  PromptExtras bindings = extras;
  bindings.emplace("note", report.text);
  bindings.emplace("report to analyze", report.text);
  return render_template(library.body(id), bindings);
}

std::string summarize_template_for(std::size_t k, const PromptLibrary& library) {
  std::string body = library.body(TemplateId::Summarize);
  if (k == 5) return body;

  std::istringstream in(body);
  std::ostringstream out;
  std::string line;
  bool first_line = true;
  bool emitted_reasons = false;
  while (std::getline(in, line)) {
    if (line.find("{reason_") != std::string::npos) {
      if (emitted_reasons) continue;
      emitted_reasons = true;
      for (std::size_t r = 0; r < k; ++r) {
        if (!first_line) out << '\n';
        out << "    ##  reason" << r << ": {reason_" << r << "}";
        first_line = false;
      }
      continue;
    }
    if (!first_line) out << '\n';
    out << line;
    first_line = false;
  }
  std::string result = out.str();
  replace_all(result, "five", number_word(k));
  return result;
}

}  // namespace radlabel
