#pragma once

// Confusion matrix and classification metrics in exact rational arithmetic.
// For class i: TP = M[i][i], FP = column sum - TP, FN = row sum - TP,
// TN = total - TP - FP - FN. Any ratio with a zero denominator is 0.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "meder/errors.hpp"

namespace meder::metrics {

using Rational = boost::multiprecision::cpp_rational;
using Count = std::uint64_t;

inline Rational ratio(Count num, Count den) {
  if (den == 0) return Rational(0);
  return Rational(boost::multiprecision::cpp_int(num), boost::multiprecision::cpp_int(den));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// "p/q" in lowest terms, or "p" when the denominator is 1.
inline std::string to_string(const Rational& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline Rational parse_rational(const std::string& s) {
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(boost::multiprecision::cpp_int(s));
    return Rational(boost::multiprecision::cpp_int(s.substr(0, slash)),
                    boost::multiprecision::cpp_int(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw DataError("not a rational number: '" + s + "'");
  }
}

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {}
  ConfusionMatrix(std::size_t n, std::vector<Count> counts) : n_(n), counts_(std::move(counts)) {
    if (counts_.size() != n * n) throw ShapeError("confusion matrix needs n*n counts");
  }

  std::size_t n_classes() const { return n_; }
  Count& at(std::size_t actual, std::size_t predicted) { return counts_[actual * n_ + predicted]; }
  Count at(std::size_t actual, std::size_t predicted) const { return counts_[actual * n_ + predicted]; }
  const std::vector<Count>& counts() const { return counts_; }

  Count total() const {
    Count t = 0;
    for (Count c : counts_) t += c;
    return t;
  }
  Count row_sum(std::size_t i) const {
    Count s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += at(i, j);
    return s;
  }
  Count col_sum(std::size_t j) const {
    Count s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, j);
    return s;
  }
  Count tp(std::size_t i) const { return at(i, i); }
  Count fp(std::size_t i) const { return col_sum(i) - tp(i); }
  Count fn(std::size_t i) const { return row_sum(i) - tp(i); }
  Count tn(std::size_t i) const { return total() - tp(i) - fp(i) - fn(i); }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<Count> counts_;
};

inline ConfusionMatrix confusion(const std::vector<int>& golds, const std::vector<int>& preds, std::size_t n_classes) {
  if (golds.size() != preds.size())
    throw DataError("confusion: " + std::to_string(golds.size()) + " golds but " + std::to_string(preds.size()) +
                    " predictions");
  ConfusionMatrix cm(n_classes);
  for (std::size_t k = 0; k < golds.size(); ++k) {
    const int g = golds[k], p = preds[k];
    if (g < 0 || static_cast<std::size_t>(g) >= n_classes || p < 0 || static_cast<std::size_t>(p) >= n_classes)
      throw DataError("confusion: label id out of range at index " + std::to_string(k));
    ++cm.at(static_cast<std::size_t>(g), static_cast<std::size_t>(p));
  }
  return cm;
}

struct ClassMetrics {
  Rational precision, recall, f1;
  Count support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

inline std::vector<ClassMetrics> per_class(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out;
  for (std::size_t i = 0; i < cm.n_classes(); ++i) {
    ClassMetrics m;
    const Count tp = cm.tp(i), fp = cm.fp(i), fn = cm.fn(i);
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    const Rational sum = m.precision + m.recall;
    m.f1 = sum == 0 ? Rational(0) : Rational(2 * m.precision * m.recall / sum);
    m.support = cm.row_sum(i);
    out.push_back(m);
  }
  return out;
}

struct MetricsReport {
  std::size_t n_classes = 0;
  Count total = 0;
  std::vector<ClassMetrics> classes;
  Rational accuracy;
  Rational macro_precision, macro_recall, macro_f1;
  Rational micro_f1;
  Rational weighted_precision, weighted_recall, weighted_f1;

  bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport aggregate(const ConfusionMatrix& cm) {
  const Count n = cm.total();
  if (cm.n_classes() == 0 || n == 0) throw DataError("aggregate: confusion matrix is empty");
  MetricsReport r;
  r.n_classes = cm.n_classes();
  r.total = n;
  r.classes = per_class(cm);

  Count diag = 0, sum_fp = 0, sum_fn = 0;
  for (std::size_t i = 0; i < cm.n_classes(); ++i) {
    diag += cm.tp(i);
    sum_fp += cm.fp(i);
    sum_fn += cm.fn(i);
  }
  r.accuracy = ratio(diag, n);
  // ΣTP / (ΣTP + (ΣFN + ΣFP)/2), scaled by 2 to stay in integers.
  r.micro_f1 = ratio(2 * diag, 2 * diag + sum_fn + sum_fp);

  const Rational classes(static_cast<long long>(cm.n_classes()));
  for (const auto& c : r.classes) {
    r.macro_precision += c.precision;
    r.macro_recall += c.recall;
    r.macro_f1 += c.f1;
    const Rational w = ratio(c.support, n);
    r.weighted_precision += w * c.precision;
    r.weighted_recall += w * c.recall;
    r.weighted_f1 += w * c.f1;
  }
  r.macro_precision /= classes;
  r.macro_recall /= classes;
  r.macro_f1 /= classes;
  return r;
}

}  // namespace meder::metrics
