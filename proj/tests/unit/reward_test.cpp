#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "radlabel/reward.hpp"
#include "support/oracles.hpp"

namespace radlabel {
namespace {

constexpr const char* kWorkedCompletion =
    "<reasoning>Support devices is found because the report mentions: 'Endotracheal tube', "
    "'subclavian line' and 'NG tube'.</reasoning> <answer>[Support Devices]</answer>";

RawPrediction pred_of(LabelSet s, std::vector<std::string> unknown = {}) {
  return {s, std::move(unknown)};
}

std::set<int> as_ints(const LabelSet& s) {
  std::set<int> out;
  for (Disease d : s.to_vector()) out.insert(static_cast<int>(index_of(d)));
  return out;
}

TEST(AccuracyReward, EmptyConventions) {
  AccuracyScore both_empty = accuracy_reward(pred_of({}), {});
  EXPECT_EQ(both_empty.precision, 1.0);
  EXPECT_EQ(both_empty.recall, 1.0);
  EXPECT_EQ(both_empty.accuracy, 1.0);

  AccuracyScore missed = accuracy_reward(pred_of({}), {Disease::Edema});
  EXPECT_EQ(missed.precision, 0.0);
  EXPECT_EQ(missed.recall, 0.0);
  EXPECT_EQ(missed.accuracy, 0.0);

  AccuracyScore hallucinated = accuracy_reward(pred_of({Disease::Edema}), {});
  EXPECT_EQ(hallucinated.accuracy, 0.0);
}

TEST(AccuracyReward, HandCountedExample) {
  AccuracyScore s = accuracy_reward(pred_of({Disease::Atelectasis, Disease::Edema}),
                                    {Disease::Atelectasis});
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.accuracy, 0.75);
}

TEST(AccuracyReward, UnknownLabelsCostPrecisionWhenConfigured) {
  const RawPrediction p = pred_of({Disease::Edema}, {"COPD"});
  EXPECT_EQ(accuracy_reward(p, {Disease::Edema}).precision, 0.5);
  RewardConfig lenient;
  lenient.count_unknown_in_precision = false;
  EXPECT_EQ(accuracy_reward(p, {Disease::Edema}, lenient).precision, 1.0);

  // Only unknowns: counts as a non-empty prediction by default.
  const RawPrediction only_unknown = pred_of({}, {"COPD"});
  EXPECT_EQ(accuracy_reward(only_unknown, {}).accuracy, 0.0);
  EXPECT_EQ(accuracy_reward(only_unknown, {}, lenient).accuracy, 1.0);
}

TEST(AccuracyReward, MatchesOracleOnAllSubsetPairsOfThreeDiseases) {
  const Disease sub[] = {Disease::Atelectasis, Disease::Edema, Disease::Pneumothorax};
  for (int pm = 0; pm < 8; ++pm) {
    for (int gm = 0; gm < 8; ++gm) {
      LabelSet p, g;
      for (int b = 0; b < 3; ++b) {
        if (pm >> b & 1) p.insert(sub[b]);
        if (gm >> b & 1) g.insert(sub[b]);
      }
      const auto expect = oracle::accuracy(as_ints(p), 0, as_ints(g));
      const auto got = accuracy_reward(pred_of(p), g);
      EXPECT_EQ(got.precision, expect.precision) << pm << "," << gm;
      EXPECT_EQ(got.recall, expect.recall) << pm << "," << gm;
      EXPECT_EQ(got.accuracy, expect.accuracy) << pm << "," << gm;
    }
  }
}

TEST(AccuracyReward, MonotoneProperties) {
  std::mt19937_64 gen(17);
  for (int i = 0; i < 2000; ++i) {
    LabelSet p = LabelSet::from_bits(static_cast<std::uint32_t>(gen()) & static_cast<std::uint32_t>(gen()));
    LabelSet g = LabelSet::from_bits(static_cast<std::uint32_t>(gen()) & static_cast<std::uint32_t>(gen()));
    if (g.empty()) continue;
    const AccuracyScore base = accuracy_reward(pred_of(p), g);
    for (Disease d : all_diseases()) {
      if (p.contains(d)) continue;
      LabelSet grown = p;
      grown.insert(d);
      const AccuracyScore after = accuracy_reward(pred_of(grown), g);
      if (g.contains(d)) {
        EXPECT_GE(after.recall, base.recall);
      } else {
        EXPECT_LE(after.precision, base.precision);
      }
    }
  }
}

TEST(FormattingReward, Cases) {
  EXPECT_EQ(formatting_reward(parse_response(kWorkedCompletion)), 1.0);
  EXPECT_EQ(formatting_reward(parse_response("<reasoning></reasoning><answer>[Edema]</answer>")), 0.0);
  EXPECT_EQ(formatting_reward(parse_response("<reasoning>[Edema]</reasoning><answer>[Edema]</answer>")),
            0.0);
  EXPECT_EQ(formatting_reward(parse_response("Edema.")), 0.0);
}

TEST(TotalReward, WorkedExampleScoresOne) {
  RewardBreakdown r = total_reward(kWorkedCompletion, {Disease::SupportDevices});
  EXPECT_EQ(r.total, 1.0);
  EXPECT_EQ(r.accuracy_reward, 1.0);
  EXPECT_EQ(r.formatting_reward, 1.0);
}

TEST(TotalReward, PartialCredit) {
  RewardBreakdown r = total_reward(
      "<reasoning>evidence of collapse and fluid</reasoning><answer>[Atelectasis, Edema]</answer>",
      {Disease::Atelectasis});
  EXPECT_NEAR(r.total, 0.8, 1e-12);
  EXPECT_EQ(r.accuracy_reward, 0.75);
}

TEST(TotalReward, GarbageScoresZero) {
  EXPECT_EQ(total_reward("garbage", {Disease::Edema}).total, 0.0);
}

TEST(TotalReward, BoundedAndDeterministic) {
  std::mt19937_64 gen(23);
  const char* pieces[] = {"<reasoning>", "</reasoning>", "<answer>", "</answer>", "[", "]",
                          "Edema", "Fracture", ", ", "COPD", "because", " ", "'"};
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    for (int j = 0; j < 12; ++j) text += pieces[gen() % std::size(pieces)];
    const LabelSet gold = LabelSet::from_bits(static_cast<std::uint32_t>(gen() % 8) << 3);
    const RewardBreakdown a = total_reward(text, gold);
    const RewardBreakdown b = total_reward(text, gold);
    EXPECT_GE(a.total, 0.0);
    EXPECT_LE(a.total, 1.0);
    EXPECT_EQ(std::memcmp(&a.total, &b.total, sizeof(double)), 0);
  }
}

TEST(RewardConfig, RejectsBadWeights) {
  RewardConfig cfg;
  cfg.w_acc = 0.7;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.w_acc = 1.2;
  cfg.w_fmt = -0.2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_NO_THROW(RewardConfig{}.validate());
}

TEST(GroupAdvantages, Examples) {
  const std::vector<double> r = {1, 0, 1, 0};
  EXPECT_EQ(group_advantages(r), (std::vector<double>{1, -1, 1, -1}));
  const std::vector<double> flat = {0.7, 0.7, 0.7};
  EXPECT_EQ(group_advantages(flat), (std::vector<double>{0, 0, 0}));
  const std::vector<double> one = {1};
  EXPECT_THROW(group_advantages(one), std::invalid_argument);
}

TEST(GroupAdvantages, ZeroMeanUnitStd) {
  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(2 + gen() % 15);
    for (double& x : r) x = u(gen);
    const auto a = group_advantages(r);
    double mean = 0, sq = 0;
    for (double x : a) mean += x;
    mean /= a.size();
    for (double x : a) sq += (x - mean) * (x - mean);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_NEAR(std::sqrt(sq / a.size()), 1.0, 1e-9);
  }
}

TEST(GroupAdvantages, TinyVarianceUsesFloor) {
  const std::vector<double> r = {0.5, 0.5 + 1e-6};
  const auto a = group_advantages(r);
  EXPECT_NEAR(a[0], -0.5e-6 / kAdvantageStdFloor, 1e-12);
}

}  // namespace
}  // namespace radlabel
