#include "radlabel/labels.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace radlabel {
namespace {

constexpr std::array<std::string_view, kDiseaseCount> kNames = {
    "Atelectasis",     "Cardiomegaly", "Consolidation",  "Edema",
    "Enlarged Cardiomediastinum",      "Fracture",       "Lung Lesion",
    "Lung Opacity",    "Pleural Effusion",               "Pleural Other",
    "Pneumonia",       "Pneumothorax", "Support Devices"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

const std::array<Disease, kDiseaseCount>& all_diseases() noexcept {
  static const std::array<Disease, kDiseaseCount> all = [] {
    std::array<Disease, kDiseaseCount> out{};
    for (std::size_t i = 0; i < kDiseaseCount; ++i) out[i] = static_cast<Disease>(i);
    return out;
  }();
  return all;
}

std::string_view canonical_name(Disease d) noexcept { return kNames[index_of(d)]; }

std::string normalize_label_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::optional<Disease> canonicalize_label(std::string_view raw) {
  const std::string key = normalize_label_text(raw);
  for (Disease d : all_diseases()) {
    if (key == normalize_label_text(canonical_name(d))) return d;
  }
  return std::nullopt;
}

LabelSet::LabelSet(std::initializer_list<Disease> diseases) {
  for (Disease d : diseases) insert(d);
}

LabelSet LabelSet::from_bits(std::uint32_t bits) {
  return LabelSet(std::bitset<kDiseaseCount>(bits & ((1u << kDiseaseCount) - 1)));
}

std::vector<Disease> LabelSet::to_vector() const {
  std::vector<Disease> out;
  for (Disease d : all_diseases()) {
    if (contains(d)) out.push_back(d);
  }
  return out;
}

std::string LabelSet::to_bracket_string() const {
  std::string out = "[";
  bool first = true;
  for (Disease d : to_vector()) {
    if (!first) out += ", ";
    out += canonical_name(d);
    first = false;
  }
  out += "]";
  return out;
}

std::string LabelSet::to_quoted_list() const {
  std::string out = "[";
  bool first = true;
  for (Disease d : to_vector()) {
    if (!first) out += ", ";
    out += "'";
    out += canonical_name(d);
    out += "'";
    first = false;
  }
  out += "]";
  return out;
}

RawPrediction label_set_from(std::span<const std::string> raws) {
  RawPrediction out;
  std::unordered_set<std::string> seen_unknown;
  for (const std::string& raw : raws) {
    std::string key = normalize_label_text(raw);
    if (key.empty()) continue;
    if (auto d = canonicalize_label(raw)) {
      out.canonical.insert(*d);
    } else if (seen_unknown.insert(key).second) {
      auto first = std::find_if_not(raw.begin(), raw.end(), is_space);
      auto last = std::find_if_not(raw.rbegin(), raw.rend(), is_space).base();
      out.unknown_labels.emplace_back(first, last);
    }
  }
  return out;
}

}  // namespace radlabel
