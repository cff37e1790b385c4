#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radlabel {

/// The closed vocabulary of chest findings. Enumerator order is the canonical
/// vocabulary order used whenever a label set is rendered.
enum class Disease : std::uint8_t {
  Atelectasis,
  Cardiomegaly,
  Consolidation,
  Edema,
  EnlargedCardiomediastinum,
  Fracture,
  LungLesion,
  LungOpacity,
  PleuralEffusion,
  PleuralOther,
  Pneumonia,
  Pneumothorax,
  SupportDevices,
};

inline constexpr std::size_t kDiseaseCount = 13;

const std::array<Disease, kDiseaseCount>& all_diseases() noexcept;

std::string_view canonical_name(Disease d) noexcept;

inline constexpr std::size_t index_of(Disease d) noexcept {
  return static_cast<std::size_t>(d);
}

/// Trims, case-folds and collapses internal whitespace. Exposed because the
/// same normalization keys unknown-label deduplication.
std::string normalize_label_text(std::string_view raw);

/// Exact-name lookup after normalization. No fuzzy matching.
std::optional<Disease> canonicalize_label(std::string_view raw);

/// Deduplicated, unordered set of diseases. Iteration and rendering follow
/// vocabulary order.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<Disease> diseases);

  static LabelSet from_bits(std::uint32_t bits);

  void insert(Disease d) { bits_.set(index_of(d)); }
  void erase(Disease d) { bits_.reset(index_of(d)); }
  bool contains(Disease d) const { return bits_.test(index_of(d)); }

  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }
  std::uint32_t bits() const { return static_cast<std::uint32_t>(bits_.to_ulong()); }

  /// Members in vocabulary order.
  std::vector<Disease> to_vector() const;

  /// "[A, B]" with canonical names in vocabulary order.
  std::string to_bracket_string() const;

  /// "['A', 'B']" as used by the judge prompts.
  std::string to_quoted_list() const;

  LabelSet operator&(const LabelSet& o) const { return LabelSet(bits_ & o.bits_); }
  LabelSet operator|(const LabelSet& o) const { return LabelSet(bits_ | o.bits_); }
  LabelSet operator-(const LabelSet& o) const { return LabelSet(bits_ & ~o.bits_); }
  LabelSet& operator|=(const LabelSet& o) {
    bits_ |= o.bits_;
    return *this;
  }

  bool is_subset_of(const LabelSet& o) const { return (bits_ & ~o.bits_).none(); }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  explicit LabelSet(std::bitset<kDiseaseCount> bits) : bits_(bits) {}
  std::bitset<kDiseaseCount> bits_;
};

struct Report {
  std::string id;
  std::string text;
  std::optional<LabelSet> gold_labels;
};

/// A model's label list after canonicalization. Off-vocabulary strings are kept
/// so that scoring can penalize them.
struct RawPrediction {
  LabelSet canonical;
  std::vector<std::string> unknown_labels;

  friend bool operator==(const RawPrediction&, const RawPrediction&) = default;
};

/// Canonicalizes each entry, drops duplicates (after normalization), and keeps
/// unknown strings in order of first appearance. Blank entries are ignored.
RawPrediction label_set_from(std::span<const std::string> raws);

}  // namespace radlabel
