#pragma once

// Brute-force metric oracle: expands a confusion matrix into individual
// (gold, predicted) observations and counts outcomes one observation at a time.

#include <utility>
#include <vector>

#include "meder/metrics.hpp"
#include "meder/random.hpp"

namespace meder::oracle {

using metrics::Rational;

inline Rational safe_div(const Rational& a, const Rational& b) { return b == 0 ? Rational(0) : a / b; }

struct ClassCounts {
  long long tp = 0, fp = 0, fn = 0, support = 0;
};

struct Expected {
  std::vector<Rational> precision, recall, f1;
  std::vector<long long> support;
  Rational accuracy, micro_f1;
  Rational macro_precision, macro_recall, macro_f1;
  Rational weighted_precision, weighted_recall, weighted_f1;
};

inline std::vector<std::pair<int, int>> observations(const metrics::ConfusionMatrix& cm) {
  std::vector<std::pair<int, int>> out;
  const auto n = cm.n_classes();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t p = 0; p < n; ++p)
      for (metrics::Count k = 0; k < cm.at(a, p); ++k) out.emplace_back(static_cast<int>(a), static_cast<int>(p));
  return out;
}

inline Expected evaluate(const metrics::ConfusionMatrix& cm) {
  const auto obs = observations(cm);
  const int n = static_cast<int>(cm.n_classes());
  std::vector<ClassCounts> c(static_cast<std::size_t>(n));
  long long correct = 0;
  for (const auto& [gold, pred] : obs) {
    for (int k = 0; k < n; ++k) {
      auto& cc = c[static_cast<std::size_t>(k)];
      if (gold == k && pred == k) ++cc.tp;
      if (gold != k && pred == k) ++cc.fp;
      if (gold == k && pred != k) ++cc.fn;
      if (gold == k) ++cc.support;
    }
    if (gold == pred) ++correct;
  }
  Expected e;
  const Rational total(static_cast<long long>(obs.size()));
  long long sum_tp = 0, sum_fp = 0, sum_fn = 0;
  for (const auto& cc : c) {
    const Rational p = safe_div(cc.tp, Rational(cc.tp + cc.fp));
    const Rational r = safe_div(cc.tp, Rational(cc.tp + cc.fn));
    const Rational f = safe_div(2 * p * r, p + r);
    e.precision.push_back(p);
    e.recall.push_back(r);
    e.f1.push_back(f);
    e.support.push_back(cc.support);
    e.macro_precision += p / n;
    e.macro_recall += r / n;
    e.macro_f1 += f / n;
    e.weighted_precision += safe_div(p * cc.support, total);
    e.weighted_recall += safe_div(r * cc.support, total);
    e.weighted_f1 += safe_div(f * cc.support, total);
    sum_tp += cc.tp;
    sum_fp += cc.fp;
    sum_fn += cc.fn;
  }
  e.accuracy = safe_div(correct, total);
  const Rational micro_p = safe_div(sum_tp, Rational(sum_tp + sum_fp));
  const Rational micro_r = safe_div(sum_tp, Rational(sum_tp + sum_fn));
  e.micro_f1 = safe_div(2 * micro_p * micro_r, micro_p + micro_r);
  return e;
}

/// Random matrix with at most `max_classes` classes and `max_total` observations.
inline metrics::ConfusionMatrix random_matrix(Rng& rng, std::size_t max_classes, std::size_t max_total) {
  const std::size_t n = 1 + rng.below(max_classes);
  metrics::ConfusionMatrix cm(n);
  const std::size_t total = 1 + rng.below(max_total);
  // Mix of uniform noise and a diagonal bias, with occasional empty classes.
  const double diag = rng.uniform();
  std::vector<bool> empty_row(n, false);
  for (std::size_t i = 0; i < n; ++i) empty_row[i] = rng.below(6) == 0;
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t a = rng.below(n);
    if (empty_row[a] && n > 1) a = (a + 1) % n;
    const std::size_t p = rng.uniform() < diag ? a : rng.below(n);
    ++cm.at(a, p);
  }
  return cm;
}

}  // namespace meder::oracle
