#include "radlabel/json_schema.hpp"

#include <cctype>

namespace radlabel {
namespace {

using nlohmann::json;

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "null") return v.is_null();
  return false;
}

std::optional<std::string> validate_at(const json& v, const json& schema, const std::string& path) {
  if (!schema.is_object()) return std::nullopt;

  if (auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = type_matches(v, it->get<std::string>());
    } else if (it->is_array()) {
      for (const auto& t : *it) ok = ok || (t.is_string() && type_matches(v, t.get<std::string>()));
    }
    if (!ok) return path + ": expected type " + it->dump();
  }

  if (auto it = schema.find("enum"); it != schema.end() && it->is_array()) {
    bool found = false;
    for (const auto& e : *it) found = found || e == v;
    if (!found) return path + ": value not in enum";
  }

  if (v.is_object()) {
    const json empty = json::object();
    const json& props = schema.contains("properties") ? schema["properties"] : empty;
    if (auto it = schema.find("required"); it != schema.end() && it->is_array()) {
      for (const auto& key : *it) {
        if (key.is_string() && !v.contains(key.get<std::string>())) {
          return path + ": missing required property '" + key.get<std::string>() + "'";
        }
      }
    }
    bool closed = schema.contains("additionalProperties") &&
                  schema["additionalProperties"].is_boolean() &&
                  !schema["additionalProperties"].get<bool>();
    for (const auto& [key, child] : v.items()) {
      if (props.contains(key)) {
        if (auto err = validate_at(child, props[key], path + "/" + key)) return err;
      } else if (closed) {
        return path + ": unexpected property '" + key + "'";
      }
    }
  }

  if (v.is_array()) {
    if (auto it = schema.find("items"); it != schema.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto err = validate_at(v[i], *it, path + "/" + std::to_string(i))) return err;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_json_schema(const json& value, const json& schema) {
  return validate_at(value, schema, "");
}

json parse_python_style_json(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote != 0) {
      out.push_back(c);
      if (c == '\\' && i + 1 < text.size()) {
        out.push_back(text[++i]);
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"') {
      quote = c;
      out.push_back(c);
      continue;
    }
    auto word_at = [&](std::string_view w) {
      if (text.substr(i, w.size()) != w) return false;
      std::size_t end = i + w.size();
      bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
      bool right_ok =
          end >= text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
      return left_ok && right_ok;
    };
    if (word_at("True")) {
      out += "true";
      i += 3;
    } else if (word_at("False")) {
      out += "false";
      i += 4;
    } else if (word_at("None")) {
      out += "null";
      i += 3;
    } else {
      out.push_back(c);
    }
  }
  return json::parse(out);
}

std::string_view extract_json_payload(std::string_view reply) {
  std::string_view s = reply;
  if (auto fence = s.find("```"); fence != std::string_view::npos) {
    std::size_t body = s.find('\n', fence);
    std::size_t close = body == std::string_view::npos ? body : s.find("```", body);
    if (body != std::string_view::npos && close != std::string_view::npos) {
      s = s.substr(body + 1, close - body - 1);
    }
  }
  std::size_t obj = s.find('{');
  std::size_t arr = s.find('[');
  std::size_t start = std::min(obj, arr);
  if (start == std::string_view::npos) return s;
  char close_char = s[start] == '{' ? '}' : ']';
  std::size_t end = s.rfind(close_char);
  if (end == std::string_view::npos || end < start) return s.substr(start);
  return s.substr(start, end - start + 1);
}

}  // namespace radlabel
