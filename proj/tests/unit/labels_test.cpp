#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "radlabel/labels.hpp"

namespace radlabel {
namespace {

TEST(CanonicalizeLabel, ExactAndCaseVariants) {
  EXPECT_EQ(canonicalize_label("Support Devices"), Disease::SupportDevices);
  EXPECT_EQ(canonicalize_label("pleural effusion"), Disease::PleuralEffusion);
  EXPECT_EQ(canonicalize_label("Pleural effusion"), Disease::PleuralEffusion);
  EXPECT_EQ(canonicalize_label("  Enlarged   cardiomediastinum \t"),
            Disease::EnlargedCardiomediastinum);
  EXPECT_EQ(canonicalize_label("LUNG OPACITY"), Disease::LungOpacity);
}

TEST(CanonicalizeLabel, UnknownLabelsAreAbsent) {
  EXPECT_FALSE(canonicalize_label("Tuberculosis").has_value());
  EXPECT_FALSE(canonicalize_label("Supportive devices").has_value());
  EXPECT_FALSE(canonicalize_label("").has_value());
  EXPECT_FALSE(canonicalize_label("Pleural Effusions").has_value());  // no fuzzy matching
}

TEST(CanonicalizeLabel, IdempotentOverVocabulary) {
  for (Disease d : all_diseases()) {
    EXPECT_EQ(canonicalize_label(canonical_name(d)), d) << canonical_name(d);
  }
}

TEST(Vocabulary, ThirteenDistinctNames) {
  std::vector<std::string> names;
  for (Disease d : all_diseases()) names.emplace_back(canonical_name(d));
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::unique(names.begin(), names.end()), names.end());
  EXPECT_EQ(names.size(), 13u);
}

TEST(LabelSetFrom, DeduplicatesCaseVariants) {
  std::vector<std::string> raws = {"Edema", "edema", "Fracture"};
  RawPrediction p = label_set_from(raws);
  EXPECT_EQ(p.canonical, (LabelSet{Disease::Edema, Disease::Fracture}));
  EXPECT_TRUE(p.unknown_labels.empty());
}

TEST(LabelSetFrom, EmptyInput) {
  RawPrediction p = label_set_from({});
  EXPECT_TRUE(p.canonical.empty());
  EXPECT_TRUE(p.unknown_labels.empty());
}

TEST(LabelSetFrom, KeepsUnknownsInFirstAppearanceOrder) {
  std::vector<std::string> raws = {"Pneumonia", "COPD", "copd ", "Tubes", "COPD"};
  RawPrediction p = label_set_from(raws);
  EXPECT_EQ(p.canonical, LabelSet{Disease::Pneumonia});
  EXPECT_EQ(p.unknown_labels, (std::vector<std::string>{"COPD", "Tubes"}));
}

TEST(LabelSetFrom, PermutationInvariantCanonicalOutput) {
  std::vector<std::string> raws = {"Edema", "Atelectasis", "foo", "Support Devices",
                                   "edema", "Lung Lesion"};
  const LabelSet expected = label_set_from(raws).canonical;
  std::mt19937 gen(3);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(raws.begin(), raws.end(), gen);
    EXPECT_EQ(label_set_from(raws).canonical, expected);
  }
}

TEST(LabelSetFrom, ItemCountInvariant) {
  std::vector<std::string> raws = {"Edema", "EDEMA", "x", "X", "y", "Fracture"};
  RawPrediction p = label_set_from(raws);
  // 6 raw items; after normalization dedup 4 distinct: edema, x, y, fracture.
  EXPECT_EQ(p.canonical.size() + p.unknown_labels.size(), 4u);
}

TEST(LabelSet, RendersInVocabularyOrder) {
  LabelSet s{Disease::SupportDevices, Disease::Atelectasis, Disease::Edema};
  EXPECT_EQ(s.to_bracket_string(), "[Atelectasis, Edema, Support Devices]");
  EXPECT_EQ(s.to_quoted_list(), "['Atelectasis', 'Edema', 'Support Devices']");
  EXPECT_EQ(LabelSet{}.to_bracket_string(), "[]");
}

TEST(LabelSet, SetAlgebra) {
  LabelSet a{Disease::Edema, Disease::Fracture};
  LabelSet b{Disease::Fracture, Disease::Pneumonia};
  EXPECT_EQ(a & b, LabelSet{Disease::Fracture});
  EXPECT_EQ(a - b, LabelSet{Disease::Edema});
  EXPECT_EQ((a | b).size(), 3u);
  EXPECT_TRUE((a & b).is_subset_of(a));
  EXPECT_EQ(LabelSet::from_bits(0xFFFFFFFF).size(), kDiseaseCount);
}

}  // namespace
}  // namespace radlabel
