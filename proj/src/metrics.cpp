#include "radlabel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "radlabel/random.hpp"

namespace radlabel {
namespace {

void check_paired(std::span<const LabelSet> a, std::span<const LabelSet> b) {
  if (a.size() != b.size()) throw std::invalid_argument("prediction/gold length mismatch");
  if (a.empty()) throw std::invalid_argument("need at least one sample");
}

double ratio_or_one(std::size_t num, std::size_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

double mean_of(std::span<const double> values, std::span<const std::size_t> idx) {
  double sum = 0.0;
  for (std::size_t i : idx) sum += values[i];
  return sum / static_cast<double>(idx.size());
}

}  // namespace

ConfusionCounts confusion(const LabelSet& pred, const LabelSet& gold) {
  return {(pred & gold).size(), (pred - gold).size(), (gold - pred).size()};
}

PrfScore prf_from_counts(const ConfusionCounts& c) {
  PrfScore s;
  s.precision = ratio_or_one(c.tp, c.tp + c.fp);
  s.recall = ratio_or_one(c.tp, c.tp + c.fn);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

PrfScore micro_prf(std::span<const LabelSet> preds, std::span<const LabelSet> golds) {
  check_paired(preds, golds);
  ConfusionCounts total;
  for (std::size_t i = 0; i < preds.size(); ++i) total += confusion(preds[i], golds[i]);
  return prf_from_counts(total);
}

std::map<Disease, DiseaseScore> per_disease_prf(std::span<const LabelSet> preds,
                                                std::span<const LabelSet> golds) {
  check_paired(preds, golds);
  std::map<Disease, DiseaseScore> out;
  for (Disease d : all_diseases()) {
    DiseaseScore s;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i].contains(d);
      const bool g = golds[i].contains(d);
      if (p && g) ++s.counts.tp;
      if (p && !g) ++s.counts.fp;
      if (!p && g) ++s.counts.fn;
    }
    s.support = s.counts.tp + s.counts.fn;
    if (s.support == 0 && s.counts.fp == 0) continue;
    if (s.counts.tp + s.counts.fp > 0) {
      s.precision = static_cast<double>(s.counts.tp) / static_cast<double>(s.counts.tp + s.counts.fp);
    }
    if (s.support > 0) {
      s.recall = static_cast<double>(s.counts.tp) / static_cast<double>(s.support);
    }
    if (s.precision && s.recall) s.f1 = harmonic(*s.precision, *s.recall);
    out.emplace(d, s);
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MetricSummary bootstrap_ci(const SampleStatistic& stat, std::size_t n, std::size_t n_boot,
                           double level, std::uint64_t seed) {
  if (n == 0 || n_boot == 0) throw std::invalid_argument("bootstrap needs n >= 1 and B >= 1");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;

  MetricSummary out;
  out.point = stat(idx);
  out.n_boot = n_boot;
  out.level = level;

  Rng rng(seed);
  std::vector<double> resampled(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = rng.index(n);
    resampled[b] = stat(idx);
  }
  std::sort(resampled.begin(), resampled.end());
  const double tail = (1.0 - level) / 2.0;
  out.ci_low = quantile_sorted(resampled, tail);
  out.ci_high = quantile_sorted(resampled, 1.0 - tail);
  return out;
}

double paired_bootstrap_test(const SampleStatistic& stat_a, const SampleStatistic& stat_b,
                             std::size_t n, std::size_t n_boot, std::uint64_t seed) {
  if (n == 0 || n_boot == 0) throw std::invalid_argument("bootstrap needs n >= 1 and B >= 1");
  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  std::size_t at_or_below = 0;
  std::size_t at_or_above = 0;
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = rng.index(n);
    const double delta = stat_a(idx) - stat_b(idx);
    if (delta <= 0.0) ++at_or_below;
    if (delta >= 0.0) ++at_or_above;
  }
  const double boot = static_cast<double>(n_boot);
  const double p = 2.0 * static_cast<double>(std::min(at_or_below, at_or_above)) / boot;
  return std::clamp(p, 1.0 / boot, 1.0);
}

SampleStatistic micro_statistic(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                                MicroComponent component) {
  check_paired(preds, golds);
  std::vector<ConfusionCounts> per_sample;
  per_sample.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) per_sample.push_back(confusion(preds[i], golds[i]));
  return [per_sample = std::move(per_sample), component](std::span<const std::size_t> idx) {
    ConfusionCounts c;
    for (std::size_t i : idx) c += per_sample[i];
    const PrfScore s = prf_from_counts(c);
    switch (component) {
      case MicroComponent::Precision: return s.precision;
      case MicroComponent::Recall: return s.recall;
      case MicroComponent::F1: break;
    }
    return s.f1;
  };
}

std::optional<double> reasoning_recall(const LabelSet& mentioned, const LabelSet& gold) {
  if (gold.empty()) return std::nullopt;
  return static_cast<double>((mentioned & gold).size()) / static_cast<double>(gold.size());
}

std::optional<double> reasoning_comprehensiveness(const LabelSet& mentioned,
                                                  const LabelSet& predicted) {
  if (predicted.empty()) return std::nullopt;
  return static_cast<double>((mentioned & predicted).size()) /
         static_cast<double>(predicted.size());
}

double cohens_kappa(std::span<const LabelSet> a, std::span<const LabelSet> b) {
  check_paired(a, b);
  std::size_t agree = 0, a_pos = 0, b_pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (Disease d : all_diseases()) {
      const bool x = a[i].contains(d);
      const bool y = b[i].contains(d);
      agree += x == y;
      a_pos += x;
      b_pos += y;
    }
  }
  const double total = static_cast<double>(a.size() * kDiseaseCount);
  const double po = static_cast<double>(agree) / total;
  const double pa = static_cast<double>(a_pos) / total;
  const double pb = static_cast<double>(b_pos) / total;
  const double pe = pa * pb + (1.0 - pa) * (1.0 - pb);
  if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

ReasoningAggregate aggregate_reasoning(std::span<const ReasoningScores> samples,
                                       std::size_t n_boot, double level, std::uint64_t seed) {
  std::vector<double> recalls, comps;
  for (const auto& s : samples) {
    if (s.recall) recalls.push_back(*s.recall);
    if (s.comprehensiveness) comps.push_back(*s.comprehensiveness);
  }
  if (recalls.empty()) throw std::invalid_argument("no sample has a defined reasoning recall");
  if (comps.empty()) {
    throw std::invalid_argument("no sample has a defined reasoning comprehensiveness");
  }

  auto summarize = [&](const std::vector<double>& values) {
    return bootstrap_ci(
        [&values](std::span<const std::size_t> idx) { return mean_of(values, idx); },
        values.size(), n_boot, level, seed);
  };
  ReasoningAggregate out;
  out.recall = summarize(recalls);
  out.comprehensiveness = summarize(comps);
  out.recall_samples = recalls.size();
  out.comprehensiveness_samples = comps.size();
  return out;
}

EvaluationReport evaluate_labels(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                                 std::size_t n_boot, double level, std::uint64_t seed) {
  check_paired(preds, golds);
  EvaluationReport out;
  out.n_samples = preds.size();
  out.precision =
      bootstrap_ci(micro_statistic(preds, golds, MicroComponent::Precision), preds.size(), n_boot,
                   level, seed);
  out.recall = bootstrap_ci(micro_statistic(preds, golds, MicroComponent::Recall), preds.size(),
                            n_boot, level, seed);
  out.f1 = bootstrap_ci(micro_statistic(preds, golds, MicroComponent::F1), preds.size(), n_boot,
                        level, seed);
  out.per_disease = per_disease_prf(preds, golds);
  return out;
}

nlohmann::json summary_to_json(const MetricSummary& m) {
  return {{"point", m.point},
          {"ci_low", m.ci_low},
          {"ci_high", m.ci_high},
          {"n_boot", m.n_boot},
          {"level", m.level}};
}

nlohmann::json evaluation_to_json(const EvaluationReport& report) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [d, s] : report.per_disease) {
    per[std::string(canonical_name(d))] = {{"precision", opt(s.precision)},
                                           {"recall", opt(s.recall)},
                                           {"f1", opt(s.f1)},
                                           {"support", s.support}};
  }
  return {{"n_samples", report.n_samples},
          {"micro_precision", summary_to_json(report.precision)},
          {"micro_recall", summary_to_json(report.recall)},
          {"micro_f1", summary_to_json(report.f1)},
          {"per_disease", per}};
}

std::string render_evaluation_table(const EvaluationReport& report) {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("     -");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%6.3f", *v);
    return std::string(buf);
  };
  auto ci_row = [](const char* name, const MetricSummary& m) {
    char buf[128];
    // Percentile intervals can exclude the point estimate; show the range
    // widened to contain it.
    std::snprintf(buf, sizeof buf, "%-18s %.3f (%.3f-%.3f)\n", name, m.point,
                  std::min(m.ci_low, m.point), std::max(m.ci_high, m.point));
    return std::string(buf);
  };
  std::ostringstream out;
  out << "Samples: " << report.n_samples << "\n";
  out << ci_row("Micro precision", report.precision);
  out << ci_row("Micro recall", report.recall);
  out << ci_row("Micro F1", report.f1);
  char head[128];
  std::snprintf(head, sizeof head, "\n%-28s %6s %6s %6s %8s\n", "Disease", "P", "R", "F1",
                "Support");
  out << head;
  for (const auto& [d, s] : report.per_disease) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-28s %s %s %s %8zu\n", std::string(canonical_name(d)).c_str(),
                  cell(s.precision).c_str(), cell(s.recall).c_str(), cell(s.f1).c_str(), s.support);
    out << buf;
  }
  return out.str();
}

}  // namespace radlabel
