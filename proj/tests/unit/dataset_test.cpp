#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "radlabel/dataset.hpp"
#include "radlabel/errors.hpp"
#include "support/scripted_client.hpp"

namespace radlabel {
namespace {

std::vector<Report> parse(const std::string& text) {
  std::istringstream in(text);
  return read_reports(in, "mem.jsonl");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(ReadReports, ParsesRecordsAndSkipsBlankLines) {
  const auto reports = parse(
      "{\"id\": \"a\", \"text\": \"Clear lungs.\", \"labels\": []}\n"
      "\n"
      "{\"id\": 7, \"text\": \"ET tube in place.\", \"labels\": [\"support devices\"]}\n"
      "{\"id\": \"c\", \"text\": \"Unlabeled.\"}\n");
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].gold_labels, LabelSet{});
  EXPECT_EQ(reports[1].id, "7");
  EXPECT_EQ(reports[1].gold_labels, LabelSet{Disease::SupportDevices});
  EXPECT_FALSE(reports[2].gold_labels.has_value());
}

TEST(ReadReports, ErrorsNameTheLine) {
  EXPECT_EQ(error_of("{\"id\": \"a\", \"text\": \"x\"}\nnot json\n"), "mem.jsonl:2: not a JSON object");
  EXPECT_NE(error_of("{\"text\": \"x\"}").find("mem.jsonl:1: missing or invalid field 'id'"),
            std::string::npos);
  EXPECT_NE(error_of("{\"id\": \"a\", \"text\": \"\"}").find("empty"), std::string::npos);
  EXPECT_NE(error_of("{\"id\": \"a\", \"text\": \"x\", \"labels\": [\"Tubes\"]}").find("'Tubes'"),
            std::string::npos);
  EXPECT_NE(error_of("{\"id\": \"a\", \"text\": \"x\"}\n{\"id\": \"a\", \"text\": \"y\"}")
                .find("mem.jsonl:2: duplicate id 'a'"),
            std::string::npos);
}

TEST(ReadReports, RoundTripThroughJson) {
  Report r{"x1", "Some \"quoted\" text\nwith newline", LabelSet{Disease::Edema, Disease::Fracture}};
  const auto back = parse(report_to_json(r).dump() + "\n");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].id, r.id);
  EXPECT_EQ(back[0].text, r.text);
  EXPECT_EQ(back[0].gold_labels, r.gold_labels);
}

std::vector<PredictionRecord> parse_preds(const std::string& text) {
  std::istringstream in(text);
  return read_predictions(in, "preds.jsonl");
}

TEST(ReadPredictions, KeepsUnknownLabelsAndSkipsMeta) {
  const auto preds = parse_preds(
      "{\"type\": \"meta\", \"command\": \"infer\"}\n"
      "{\"id\": \"a\", \"labels\": [\"edema\", \"COPD\"], \"reasoning\": \"fluid\"}\n"
      "{\"id\": 3, \"labels\": []}\n");
  ASSERT_EQ(preds.size(), 2u);
  EXPECT_EQ(preds[0].labels.canonical, LabelSet{Disease::Edema});
  EXPECT_EQ(preds[0].labels.unknown_labels, std::vector<std::string>{"COPD"});
  EXPECT_EQ(preds[0].reasoning, "fluid");
  EXPECT_EQ(preds[1].id, "3");
  EXPECT_TRUE(preds[1].reasoning.empty());
}

TEST(ReadPredictions, RejectsBadRecords) {
  auto err = [](const std::string& text) -> std::string {
    try {
      parse_preds(text);
    } catch (const DataError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_EQ(err("{\"id\": \"a\"}"), "preds.jsonl:1: missing or invalid field 'labels'");
  EXPECT_EQ(err("{\"id\": \"a\", \"labels\": [1]}"), "preds.jsonl:1: label entries must be strings");
  EXPECT_EQ(err("{\"id\": \"a\", \"labels\": []}\n{\"id\": \"a\", \"labels\": []}"),
            "preds.jsonl:2: duplicate id 'a'");
  EXPECT_EQ(err("[]"), "preds.jsonl:1: not a JSON object");
}

TEST(ReadPredictions, RoundTrip) {
  PredictionRecord r{"x", label_set_from(std::vector<std::string>{"Fracture", "Mass lesion"}), "r"};
  const auto back = parse_preds(prediction_to_json(r).dump());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].labels, r.labels);
  EXPECT_EQ(back[0].reasoning, "r");
}

TEST(ReadReports, SkipsMetaHeader) {
  const auto reports = parse("{\"type\": \"meta\"}\n{\"id\": \"a\", \"text\": \"x\"}\n");
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].id, "a");
}

TEST(DatasetStats, HandComputed) {
  std::vector<Report> reports = {
      {"a", "one two three", LabelSet{Disease::Edema}},
      {"b", "  four\tfive  ", LabelSet{Disease::Edema, Disease::Fracture}},
      {"c", "six", LabelSet{}},
      {"d", "seven eight nine ten", LabelSet{}},
  };
  const DatasetStats s = dataset_stats(reports);
  EXPECT_EQ(s.n_reports, 4u);
  EXPECT_DOUBLE_EQ(s.avg_length_words, 10.0 / 4.0);
  EXPECT_DOUBLE_EQ(s.avg_labels, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(s.prevalence[index_of(Disease::Edema)], 0.5);
  EXPECT_DOUBLE_EQ(s.prevalence[index_of(Disease::Fracture)], 0.25);
  EXPECT_EQ(s.prevalence[index_of(Disease::Pneumonia)], 0.0);

  double total = 0;
  for (double p : s.prevalence) total += p;
  EXPECT_DOUBLE_EQ(total, s.avg_labels);
}

TEST(DatasetStats, RequiresGoldAndData) {
  EXPECT_THROW(dataset_stats({}), DataError);
  std::vector<Report> missing = {{"a", "x", std::nullopt}};
  EXPECT_THROW(dataset_stats(missing), DataError);
}

TEST(DatasetStats, WordCount) {
  EXPECT_EQ(count_words(""), 0u);
  EXPECT_EQ(count_words("  a  b\nc\t"), 3u);
}

TEST(DatasetStats, TableHasOneRowPerDisease) {
  std::vector<Report> reports = {{"a", "x y", LabelSet{Disease::Edema}}};
  const std::string table = render_stats_table({{"tiny", dataset_stats(reports)}});
  EXPECT_NE(table.find("tiny"), std::string::npos);
  for (Disease d : all_diseases()) EXPECT_NE(table.find(canonical_name(d)), std::string::npos);
  EXPECT_NE(table.find("1.000"), std::string::npos);
}

TEST(ExtractLabelList, Fallbacks) {
  EXPECT_EQ(extract_label_list("<answer>[Edema]</answer>").canonical, LabelSet{Disease::Edema});
  EXPECT_EQ(extract_label_list("Labels: ['Fracture', 'COPD'] done").canonical,
            LabelSet{Disease::Fracture});
  EXPECT_EQ(extract_label_list("Labels: ['Fracture', 'COPD'] done").unknown_labels,
            std::vector<std::string>{"COPD"});
  EXPECT_EQ(extract_label_list("Pneumonia, Edema").canonical,
            (LabelSet{Disease::Pneumonia, Disease::Edema}));
  EXPECT_TRUE(extract_label_list("[]").canonical.empty());
}

TEST(BootstrapLabels, CollectsFailuresAndWarnings) {
  testing::ScriptedClient client([](std::size_t call, const std::string& prompt) -> std::string {
    if (prompt.find("BROKEN") != std::string::npos) throw TransportError("HTTP 500", 500);
    return call == 0 ? "['Edema', 'Heart failure']" : "[]";
  });
  std::vector<Report> reports = {
      {"r1", "Vascular congestion.", std::nullopt},
      {"r2", "BROKEN", std::nullopt},
      {"r3", "Normal.", std::nullopt},
  };
  const LabelingResult res = bootstrap_labels(client, reports, GenerationParams{});
  ASSERT_EQ(res.reports.size(), 2u);
  EXPECT_EQ(res.reports[0].gold_labels, LabelSet{Disease::Edema});
  EXPECT_EQ(res.reports[1].gold_labels, LabelSet{});
  ASSERT_EQ(res.failures.size(), 1u);
  EXPECT_EQ(res.failures[0].report_id, "r2");
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_NE(res.warnings[0].find("Heart failure"), std::string::npos);
}

TEST(BootstrapLabels, AnswerListBecomesSilverGold) {
  auto client = testing::ScriptedClient::cycling({"[Support Devices]"});
  std::vector<Report> reports = {{"r1", "ET tube terminates 4 cm above the carina.", std::nullopt}};
  const LabelingResult res = bootstrap_labels(client, reports, GenerationParams{});
  ASSERT_EQ(res.reports.size(), 1u);
  EXPECT_EQ(res.reports[0].gold_labels, LabelSet{Disease::SupportDevices});
  EXPECT_NE(client.prompts()[0].find("ET tube terminates"), std::string::npos);
}

TEST(SampleReports, SeededWithoutReplacement) {
  std::vector<Report> reports;
  for (int i = 0; i < 100; ++i) reports.push_back({std::to_string(i), "t", std::nullopt});
  const auto a = sample_reports(reports, 30, 5);
  const auto b = sample_reports(reports, 30, 5);
  const auto c = sample_reports(reports, 30, 6);
  ASSERT_EQ(a.size(), 30u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ids.insert(a[i].id);
    EXPECT_EQ(a[i].id, b[i].id);
  }
  EXPECT_EQ(ids.size(), 30u);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].id != c[i].id;
  EXPECT_TRUE(differs);
  EXPECT_EQ(sample_reports(reports, 100, 1).size(), 100u);
  EXPECT_THROW(sample_reports(reports, 101, 1), std::invalid_argument);
}

}  // namespace
}  // namespace radlabel
