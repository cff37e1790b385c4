#pragma once

// Independent reference computations used by unit and acceptance tests. These
// deliberately avoid LabelSet algebra and the library's helpers so they can
// check the implementations rather than restate them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace radlabel::oracle {

struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

/// Hand count over explicit element lists.
inline Counts count(const std::set<int>& pred, const std::set<int>& gold) {
  Counts c;
  for (int p : pred) (gold.count(p) ? c.tp : c.fp)++;
  for (int g : gold) {
    if (!pred.count(g)) c.fn++;
  }
  return c;
}

struct Accuracy {
  double precision, recall, accuracy;
};

/// The reward's accuracy component from first principles. `unknown` extra
/// predicted strings are false positives.
inline Accuracy accuracy(const std::set<int>& pred, long unknown, const std::set<int>& gold) {
  Counts c = count(pred, gold);
  c.fp += unknown;
  const long predicted = c.tp + c.fp;
  double p, r;
  if (predicted == 0 && gold.empty()) {
    p = r = 1.0;
  } else if (predicted == 0 || gold.empty()) {
    p = r = 0.0;
  } else {
    p = double(c.tp) / double(predicted);
    r = double(c.tp) / double(gold.size());
  }
  return {p, r, (p + r) / 2.0};
}

struct Prf {
  double p, r, f1;
};

inline Prf micro(const std::vector<std::set<int>>& preds, const std::vector<std::set<int>>& golds) {
  Counts total;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    Counts c = count(preds[i], golds[i]);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  const double p = total.tp + total.fp == 0 ? 1.0 : double(total.tp) / double(total.tp + total.fp);
  const double r = total.tp + total.fn == 0 ? 1.0 : double(total.tp) / double(total.tp + total.fn);
  const double f = p + r == 0 ? 0.0 : 2 * p * r / (p + r);
  return {p, r, f};
}

/// Uniform index in [0, n) by rejection over raw mt19937_64 output.
inline std::uint64_t draw(std::mt19937_64& eng, std::uint64_t n) {
  const std::uint64_t bound = UINT64_MAX - (UINT64_MAX % n);
  while (true) {
    std::uint64_t x = eng();
    if (x < bound) return x % n;
  }
}

/// numpy.percentile(..., method="linear") on an unsorted copy.
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (double(v.size()) - 1.0) * q;
  const double lo = std::floor(h);
  const double hi = std::ceil(h);
  return v[std::size_t(lo)] + (h - lo) * (v[std::size_t(hi)] - v[std::size_t(lo)]);
}

}  // namespace radlabel::oracle
