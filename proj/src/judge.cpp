#include "radlabel/judge.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "radlabel/errors.hpp"
#include "radlabel/json_schema.hpp"

namespace radlabel {
namespace {

using nlohmann::json;

class LenientParser {
 public:
  explicit LenientParser(std::string_view text) : s_(text) {}

  json parse() {
    json v = value(0);
    skip();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  static constexpr int kMaxDepth = 128;

  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("lenient JSON: " + why + " at offset " + std::to_string(pos_));
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }

  // Whitespace, plus parenthesized remarks such as "(The report mentions ...)".
  void skip() {
    while (!at_end()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '(') {
        int depth = 0;
        do {
          if (s_[pos_] == '(') ++depth;
          if (s_[pos_] == ')') --depth;
          ++pos_;
        } while (!at_end() && depth > 0);
        if (depth != 0) fail("unterminated remark");
      } else {
        break;
      }
    }
  }

  json value(int depth) {
    if (depth > kMaxDepth) fail("nesting too deep");
    skip();
    char c = peek();
    if (c == '{') return object(depth);
    if (c == '[') return array(depth);
    if (c == '"' || c == '\'') return json(string());
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return number();
    std::string word = identifier();
    if (word == "True" || word == "true") return true;
    if (word == "False" || word == "false") return false;
    if (word == "None" || word == "null") return nullptr;
    fail(word.empty() ? "unexpected character" : "unexpected word '" + word + "'");
  }

  json object(int depth) {
    ++pos_;
    json obj = json::object();
    while (true) {
      skip();
      if (peek() == '}') {
        ++pos_;
        return obj;
      }
      std::string key;
      if (peek() == '"' || peek() == '\'') {
        key = string();
      } else {
        key = identifier();
        if (key.empty()) fail("expected key");
      }
      skip();
      if (peek() != ':') fail("expected ':'");
      ++pos_;
      obj[key] = value(depth + 1);
      skip();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
  }

  json array(int depth) {
    ++pos_;
    json arr = json::array();
    while (true) {
      skip();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(value(depth + 1));
      skip();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']'");
      }
    }
  }

  std::string string() {
    const char quote = s_[pos_++];
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated string");
      char c = s_[pos_++];
      if (c == quote) return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end()) fail("unterminated escape");
      char e = s_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'u': {
          if (pos_ + 4 > s_.size()) fail("short \\u escape");
          unsigned code = 0;
          for (int i = 0; i < 4; ++i) {
            char h = s_[pos_++];
            code <<= 4;
            if (h >= '0' && h <= '9') code |= static_cast<unsigned>(h - '0');
            else if (h >= 'a' && h <= 'f') code |= static_cast<unsigned>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') code |= static_cast<unsigned>(h - 'A' + 10);
            else fail("bad \\u escape");
          }
          append_utf8(out, code);
          break;
        }
        default: out.push_back(e);
      }
    }
  }

  static void append_utf8(std::string& out, unsigned code) {
    if (code < 0x80) {
      out.push_back(static_cast<char>(code));
    } else if (code < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (code >> 6)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (code >> 12)));
      out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    }
  }

  json number() {
    std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' ||
                         peek() == 'e' || peek() == 'E' || peek() == '+' || peek() == '-')) {
      ++pos_;
    }
    json v = json::parse(s_.substr(start, pos_ - start), nullptr, false);
    if (v.is_discarded()) fail("bad number");
    return v;
  }

  std::string identifier() {
    std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<bool> as_flag(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    std::string s = normalize_label_text(v.get<std::string>());
    if (s == "true" || s == "yes") return true;
    if (s == "false" || s == "no") return false;
  }
  return std::nullopt;
}

void add_target(JudgedPhrase& phrase, JudgeAssessment& out, const json& name) {
  if (!name.is_string()) {
    if (!name.is_null()) ++out.dropped_targets;
    return;
  }
  const std::string text = name.get<std::string>();
  if (normalize_label_text(text).empty()) return;
  if (auto d = canonicalize_label(text)) {
    if (std::find(phrase.target_diseases.begin(), phrase.target_diseases.end(), *d) ==
        phrase.target_diseases.end()) {
      phrase.target_diseases.push_back(*d);
    }
  } else {
    ++out.dropped_targets;
  }
}

void collect_targets(JudgedPhrase& phrase, JudgeAssessment& out, const json& field) {
  if (field.is_array()) {
    for (const auto& t : field) add_target(phrase, out, t);
  } else {
    add_target(phrase, out, field);
  }
}

}  // namespace

std::string_view judge_variant_name(JudgeVariant v) noexcept {
  return v == JudgeVariant::GptStyle ? "gpt" : "gemini";
}

json judge_response_format(const PromptLibrary& library) {
  return parse_python_style_json(library.judge_schema_text());
}

JudgeRequest build_judge_request(const Report& report, std::string_view reasoning,
                                 const LabelSet& result_list, JudgeVariant variant,
                                 const PromptLibrary& library) {
  const TemplateId id =
      variant == JudgeVariant::GptStyle ? TemplateId::JudgeGpt : TemplateId::JudgeGemini;
  JudgeRequest req;
  req.prompt = render_prompt(id, report,
                             {{"reasoning", std::string(reasoning)},
                              {"result", result_list.to_quoted_list()}},
                             library);
  req.response_format = judge_response_format(library);
  return req;
}

json parse_lenient_json(std::string_view text) { return LenientParser(text).parse(); }

JudgeAssessment parse_judge_output(std::string_view raw, JudgeVariant variant) {
  JudgeAssessment out;
  out.variant = variant;
  out.raw = std::string(raw);

  const std::string_view payload = extract_json_payload(raw);
  json doc = json::parse(payload, nullptr, false);
  if (doc.is_discarded()) {
    try {
      doc = parse_lenient_json(payload);
    } catch (const std::exception&) {
      out.parse_failed = true;
      return out;
    }
  }

  const json* results = nullptr;
  if (doc.is_array()) {
    results = &doc;
  } else if (doc.is_object() && doc.contains("results") && doc["results"].is_array()) {
    results = &doc["results"];
  }
  if (results == nullptr) {
    out.parse_failed = true;
    return out;
  }

  for (const json& item : *results) {
    if (!item.is_object() || !item.contains("phrase") || !item["phrase"].is_string() ||
        item["phrase"].get<std::string>().empty()) {
      ++out.malformed_elements;
      continue;
    }
    JudgedPhrase phrase;
    phrase.phrase = item["phrase"].get<std::string>();
    if (auto it = item.find("whether_supported_by_report"); it != item.end()) {
      phrase.supported_by_report = as_flag(*it).value_or(false);
    }
    if (auto it = item.find("target_diseases"); it != item.end()) collect_targets(phrase, out, *it);
    if (auto it = item.find("target_disease"); it != item.end()) collect_targets(phrase, out, *it);
    out.phrases.push_back(std::move(phrase));
  }
  return out;
}

json serialize_judge_assessment(const JudgeAssessment& assessment) {
  json results = json::array();
  for (const auto& p : assessment.phrases) {
    json targets = json::array();
    for (Disease d : p.target_diseases) targets.push_back(std::string(canonical_name(d)));
    results.push_back({{"phrase", p.phrase},
                       {"whether_supported_by_report", p.supported_by_report},
                       {"target_diseases", targets}});
  }
  return {{"results", results}};
}

LabelSet mentioned_labels(const JudgeAssessment& assessment) {
  LabelSet out;
  for (const auto& p : assessment.phrases) {
    for (Disease d : p.target_diseases) out.insert(d);
  }
  return out;
}

JudgeAssessment judge_reasoning(ChatClient& client, const Report& report,
                                std::string_view reasoning, const LabelSet& predicted,
                                JudgeVariant variant, const GenerationParams& params,
                                const PromptLibrary& library) {
  const JudgeRequest req = build_judge_request(report, reasoning, predicted, variant, library);
  const ChatMessage msg{"user", req.prompt};
  try {
    json reply = client.chat_structured(params, std::span<const ChatMessage>(&msg, 1),
                                        req.response_format);
    return parse_judge_output(reply.dump(), variant);
  } catch (const StructuredOutputError& e) {
    JudgeAssessment a = parse_judge_output(e.raw(), variant);
    a.parse_failed = a.parse_failed || a.phrases.empty();
    return a;
  }
}

ReasoningScores score_reasoning(const JudgeAssessment& assessment, const LabelSet& gold,
                                const LabelSet& predicted) {
  const LabelSet mentioned = mentioned_labels(assessment);
  return {reasoning_recall(mentioned, gold), reasoning_comprehensiveness(mentioned, predicted)};
}

}  // namespace radlabel
