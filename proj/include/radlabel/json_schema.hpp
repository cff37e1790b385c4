#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace radlabel {

/// Validates `value` against the JSON Schema subset used by structured-output
/// requests: type (object, array, string, boolean, number, integer, null),
/// properties, required, additionalProperties: false, items, enum.
/// Returns the first violation as "<json pointer>: <message>", or nullopt.
std::optional<std::string> validate_json_schema(const nlohmann::json& value,
                                                const nlohmann::json& schema);

/// Parses the shipped schema document, which uses Python literals
/// (`True`/`False`/`None`) outside of strings.
nlohmann::json parse_python_style_json(std::string_view text);

/// Pulls the JSON payload out of a model reply: strips Markdown code fences
/// and surrounding prose, keeping the outermost object or array.
std::string_view extract_json_payload(std::string_view reply);

}  // namespace radlabel
