#include "radlabel/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "radlabel/errors.hpp"
#include "radlabel/random.hpp"
#include "radlabel/response.hpp"

namespace radlabel {
namespace {

using nlohmann::json;

[[noreturn]] void data_error(const std::string& source, std::size_t line, const std::string& msg) {
  throw DataError(source + ":" + std::to_string(line) + ": " + msg);
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool left_align) {
  if (s.size() >= width) return s;
  std::string fill(width - s.size(), ' ');
  return left_align ? s + fill : fill + s;
}

}  // namespace

std::vector<Report> read_reports(std::istream& in, const std::string& source) {
  std::vector<Report> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; })) {
      continue;
    }
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) data_error(source, line_no, "not a JSON object");
    if (rec.value("type", "") == "meta") continue;

    Report r;
    if (!rec.contains("id") || !(rec["id"].is_string() || rec["id"].is_number_integer())) {
      data_error(source, line_no, "missing or invalid field 'id'");
    }
    r.id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
    if (!rec.contains("text") || !rec["text"].is_string()) {
      data_error(source, line_no, "missing or invalid field 'text'");
    }
    r.text = rec["text"].get<std::string>();
    if (r.text.empty()) data_error(source, line_no, "field 'text' is empty");

    if (auto it = rec.find("labels"); it != rec.end() && !it->is_null()) {
      if (!it->is_array()) data_error(source, line_no, "field 'labels' must be a list");
      LabelSet gold;
      for (const auto& item : *it) {
        if (!item.is_string()) data_error(source, line_no, "label entries must be strings");
        auto d = canonicalize_label(item.get<std::string>());
        if (!d) {
          data_error(source, line_no, "gold label '" + item.get<std::string>() +
                                          "' is not in the vocabulary");
        }
        gold.insert(*d);
      }
      r.gold_labels = gold;
    }
    if (!ids.insert(r.id).second) data_error(source, line_no, "duplicate id '" + r.id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Report> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_reports(in, path.string());
}

std::vector<PredictionRecord> read_predictions(std::istream& in, const std::string& source) {
  std::vector<PredictionRecord> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; })) {
      continue;
    }
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) data_error(source, line_no, "not a JSON object");
    if (rec.value("type", "") == "meta") continue;

    PredictionRecord p;
    if (!rec.contains("id") || !(rec["id"].is_string() || rec["id"].is_number_integer())) {
      data_error(source, line_no, "missing or invalid field 'id'");
    }
    p.id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
    auto labels = rec.find("labels");
    if (labels == rec.end() || !labels->is_array()) {
      data_error(source, line_no, "missing or invalid field 'labels'");
    }
    std::vector<std::string> names;
    for (const auto& item : *labels) {
      if (!item.is_string()) data_error(source, line_no, "label entries must be strings");
      names.push_back(item.get<std::string>());
    }
    p.labels = label_set_from(names);
    if (auto it = rec.find("reasoning"); it != rec.end() && !it->is_null()) {
      if (!it->is_string()) data_error(source, line_no, "field 'reasoning' must be a string");
      p.reasoning = it->get<std::string>();
    }
    if (!ids.insert(p.id).second) data_error(source, line_no, "duplicate id '" + p.id + "'");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_predictions(in, path.string());
}

json prediction_to_json(const PredictionRecord& record) {
  json labels = json::array();
  for (Disease d : record.labels.canonical.to_vector()) labels.push_back(std::string(canonical_name(d)));
  for (const auto& u : record.labels.unknown_labels) labels.push_back(u);
  return {{"id", record.id}, {"labels", labels}, {"reasoning", record.reasoning}};
}

json report_to_json(const Report& report) {
  json j = {{"id", report.id}, {"text", report.text}};
  if (report.gold_labels) {
    json labels = json::array();
    for (Disease d : report.gold_labels->to_vector()) labels.push_back(std::string(canonical_name(d)));
    j["labels"] = labels;
  }
  return j;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

DatasetStats dataset_stats(const std::vector<Report>& reports) {
  if (reports.empty()) throw DataError("dataset statistics need at least one report");
  DatasetStats s;
  s.n_reports = reports.size();
  std::size_t words = 0;
  std::size_t labels = 0;
  std::array<std::size_t, kDiseaseCount> counts{};
  for (const Report& r : reports) {
    if (!r.gold_labels) throw DataError("report '" + r.id + "' has no gold labels");
    words += count_words(r.text);
    labels += r.gold_labels->size();
    for (Disease d : r.gold_labels->to_vector()) ++counts[index_of(d)];
  }
  const auto n = static_cast<double>(s.n_reports);
  s.avg_length_words = static_cast<double>(words) / n;
  s.avg_labels = static_cast<double>(labels) / n;
  for (std::size_t i = 0; i < kDiseaseCount; ++i) s.prevalence[i] = static_cast<double>(counts[i]) / n;
  return s;
}

json stats_to_json(const DatasetStats& stats) {
  json prevalence = json::object();
  for (Disease d : all_diseases()) {
    prevalence[std::string(canonical_name(d))] = stats.prevalence[index_of(d)];
  }
  return {{"reports", stats.n_reports},
          {"average_length_words", stats.avg_length_words},
          {"average_labels", stats.avg_labels},
          {"prevalence", prevalence}};
}

std::string render_stats_table(const std::vector<std::pair<std::string, DatasetStats>>& columns) {
  constexpr std::size_t kLabelWidth = 30;
  constexpr std::size_t kColWidth = 14;
  std::ostringstream out;
  auto row = [&](const std::string& label, auto&& cell) {
    out << pad(label, kLabelWidth, true);
    for (const auto& [name, stats] : columns) out << pad(cell(stats), kColWidth, false);
    out << '\n';
  };
  out << pad("", kLabelWidth, true);
  for (const auto& [name, stats] : columns) out << pad(name, kColWidth, false);
  out << '\n';
  row("Reports", [](const DatasetStats& s) { return std::to_string(s.n_reports); });
  row("Average length (words)", [](const DatasetStats& s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", s.avg_length_words);
    return std::string(buf);
  });
  row("Average labels", [](const DatasetStats& s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", s.avg_labels);
    return std::string(buf);
  });
  out << "Disease\n";
  for (Disease d : all_diseases()) {
    row("    " + std::string(canonical_name(d)),
        [d](const DatasetStats& s) { return fixed3(s.prevalence[index_of(d)]); });
  }
  return out.str();
}

RawPrediction extract_label_list(std::string_view reply) {
  std::vector<std::string> items;
  const ParsedResponse parsed = parse_response(reply);
  if (parsed.has_answer_tag) return parsed.prediction;

  const std::size_t open = reply.find('[');
  const std::size_t close = open == std::string_view::npos ? open : reply.find(']', open);
  if (open != std::string_view::npos && close != std::string_view::npos) {
    split_label_list(reply.substr(open, close - open + 1), items);
  } else {
    split_label_list(reply, items);
  }
  return label_set_from(items);
}

LabelingResult bootstrap_labels(ChatClient& client, const std::vector<Report>& reports,
                                const GenerationParams& params, const PromptLibrary& library) {
  LabelingResult out;
  for (const Report& r : reports) {
    try {
      const ChatMessage msg{"user", render_prompt(TemplateId::SftLabelGen, r, {}, library)};
      const std::string reply = client.chat(params, std::span<const ChatMessage>(&msg, 1));
      const RawPrediction pred = extract_label_list(reply);
      for (const std::string& unknown : pred.unknown_labels) {
        out.warnings.push_back("report " + r.id + ": dropped off-vocabulary label '" + unknown + "'");
      }
      Report labeled = r;
      labeled.gold_labels = pred.canonical;
      out.reports.push_back(std::move(labeled));
    } catch (const std::exception& e) {
      out.failures.push_back({r.id, e.what()});
    }
  }
  return out;
}

std::vector<Report> sample_reports(const std::vector<Report>& reports, std::size_t n,
                                   std::uint64_t seed) {
  if (n > reports.size()) {
    throw std::invalid_argument("cannot sample " + std::to_string(n) + " of " +
                                std::to_string(reports.size()) + " reports");
  }
  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots are the sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.index(order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<Report> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(reports[order[i]]);
  return out;
}

}  // namespace radlabel
