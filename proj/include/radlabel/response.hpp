#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "radlabel/labels.hpp"

namespace radlabel {

/// Fields recovered from a raw completion of the form
/// `<reasoning>...</reasoning><answer>[...]</answer>`.
///
/// `well_formed` holds only when each of the four tags occurs exactly once,
/// the reasoning block precedes the answer block, and the answer content is a
/// bracketed list. Otherwise the remaining fields are best-effort.
struct ParsedResponse {
  std::string reasoning;
  RawPrediction prediction;
  bool has_reasoning_tag = false;
  bool has_answer_tag = false;
  bool well_formed = false;
};

/// Never throws; any text yields a ParsedResponse.
ParsedResponse parse_response(std::string_view raw);

/// Splits list content such as `['A', "B", C]` or `A, B` into trimmed items
/// with surrounding quotes removed. Returns whether the content was bracketed.
bool split_label_list(std::string_view content, std::vector<std::string>& items);

std::string serialize_response(std::string_view reasoning, const LabelSet& labels);

/// True when the reasoning is blank or, after lowercasing and dropping
/// punctuation, carries exactly the same word multiset as the label names.
bool is_reasoning_repeat(std::string_view reasoning, const LabelSet& labels);

}  // namespace radlabel
