#include "radlabel/response.hpp"

#include <algorithm>
#include <cctype>

namespace radlabel {
namespace {

constexpr std::string_view kReasonOpen = "<reasoning>";
constexpr std::string_view kReasonClose = "</reasoning>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

struct Span {
  bool found = false;
  std::size_t open = 0;   // position of the opening tag
  std::size_t close = 0;  // position of the closing tag
  std::string_view inner;
};

Span first_span(std::string_view text, std::string_view open, std::string_view close) {
  Span s;
  std::size_t o = text.find(open);
  if (o == std::string_view::npos) return s;
  std::size_t c = text.find(close, o + open.size());
  if (c == std::string_view::npos) return s;
  s.found = true;
  s.open = o;
  s.close = c;
  s.inner = text.substr(o + open.size(), c - o - open.size());
  return s;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view strip_quotes(std::string_view s) {
  while (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = trim(s.substr(1, s.size() - 2));
  }
  return s;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  std::sort(tokens.begin(), tokens.end());
  return tokens;
}

}  // namespace

bool split_label_list(std::string_view content, std::vector<std::string>& items) {
  items.clear();
  std::string_view body = trim(content);
  bool bracketed = body.size() >= 2 && body.front() == '[' && body.back() == ']';
  if (bracketed) body = body.substr(1, body.size() - 2);

  std::string cur;
  char quote = 0;
  auto flush = [&] {
    std::string_view item = strip_quotes(trim(cur));
    if (!item.empty()) items.emplace_back(item);
    cur.clear();
  };
  for (char c : body) {
    if (quote != 0) {
      if (c == quote) quote = 0;
      cur.push_back(c);
    } else if (c == '\'' || c == '"') {
      // Only treat as an opening quote at the start of an item; apostrophes
      // inside words are ordinary characters.
      if (trim(cur).empty()) quote = c;
      cur.push_back(c);
    } else if (c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return bracketed;
}

ParsedResponse parse_response(std::string_view raw) {
  ParsedResponse out;
  Span reasoning = first_span(raw, kReasonOpen, kReasonClose);
  Span answer = first_span(raw, kAnswerOpen, kAnswerClose);

  out.has_reasoning_tag = reasoning.found;
  out.has_answer_tag = answer.found;
  if (reasoning.found) out.reasoning = std::string(reasoning.inner);

  bool bracketed = false;
  if (answer.found) {
    std::vector<std::string> items;
    bracketed = split_label_list(answer.inner, items);
    out.prediction = label_set_from(items);
  }

  bool single_tags = count_occurrences(raw, kReasonOpen) == 1 &&
                     count_occurrences(raw, kReasonClose) == 1 &&
                     count_occurrences(raw, kAnswerOpen) == 1 &&
                     count_occurrences(raw, kAnswerClose) == 1;
  out.well_formed = reasoning.found && answer.found && single_tags &&
                    reasoning.close < answer.open && bracketed;
  return out;
}

std::string serialize_response(std::string_view reasoning, const LabelSet& labels) {
  std::string out;
  out.reserve(reasoning.size() + 64);
  out += kReasonOpen;
  out += reasoning;
  out += kReasonClose;
  out += kAnswerOpen;
  out += labels.to_bracket_string();
  out += kAnswerClose;
  return out;
}

bool is_reasoning_repeat(std::string_view reasoning, const LabelSet& labels) {
  std::vector<std::string> reason_tokens = word_tokens(reasoning);
  if (reason_tokens.empty()) return true;
  std::string names;
  for (Disease d : labels.to_vector()) {
    names += canonical_name(d);
    names += ' ';
  }
  return reason_tokens == word_tokens(names);
}

}  // namespace radlabel
