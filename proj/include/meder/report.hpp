#pragma once

// Text, JSON and CSV renderings of a metrics report.
//
// JSON schema "meder.metrics/1":
//   {
//     "schema": "meder.metrics/1",
//     "labels": [name, ...],
//     "total": n,
//     "confusion": [[count, ...], ...],          rows = actual, columns = predicted
//     "per_class": [{"label", "support", "precision", "recall", "f1"}, ...],
//     "accuracy", "micro_f1",
//     "macro": {"precision", "recall", "f1"},
//     "weighted": {"precision", "recall", "f1"}
//   }
// Every metric is {"exact": "p/q", "value": double}.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meder/errors.hpp"
#include "meder/metrics.hpp"

namespace meder::metrics {

inline constexpr const char* kReportSchema = "meder.metrics/1";

/// Percentage with two decimals, rounded half away from zero: 0.875 -> "87.50".
inline std::string percent(const Rational& r) {
  using boost::multiprecision::cpp_int;
  const Rational scaled = r * 10000;
  cpp_int num = boost::multiprecision::numerator(scaled);
  const cpp_int den = boost::multiprecision::denominator(scaled);
  const bool neg = num < 0;
  if (neg) num = -num;
  cpp_int q = num / den;
  if ((num % den) * 2 >= den) ++q;
  std::string digits = q.str();
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  std::string out = digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
  return neg && q != 0 ? "-" + out : out;
}

inline std::vector<std::string> default_label_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("class" + std::to_string(i));
  return out;
}

namespace detail {

inline std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

inline std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

inline void check_labels(const std::vector<std::string>& labels, std::size_t n) {
  if (labels.size() != n)
    throw DataError("report: " + std::to_string(labels.size()) + " label names for " + std::to_string(n) +
                    " classes");
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Class-wise table followed by overall rows, values in percent.
inline std::string render_table(const MetricsReport& r, const std::vector<std::string>& labels) {
  detail::check_labels(labels, r.n_classes);
  std::size_t w = std::string("Overall Accuracy").size();
  for (const auto& l : labels) w = std::max(w, l.size());
  w += 2;
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::string& p, const std::string& rc, const std::string& f,
                 const std::string& n) {
    os << detail::pad_right(name, w) << detail::pad_left(p, 10) << detail::pad_left(rc, 10)
       << detail::pad_left(f, 10) << detail::pad_left(n, 9) << '\n';
  };
  row("Class", "Precision", "Recall", "F1-Score", "Support");
  for (std::size_t i = 0; i < r.n_classes; ++i) {
    const auto& c = r.classes[i];
    row(labels[i], percent(c.precision), percent(c.recall), percent(c.f1), std::to_string(c.support));
  }
  os << '\n';
  const std::string total = std::to_string(r.total);
  row("Overall Accuracy", "", "", percent(r.accuracy), total);
  row("Macro Avg", percent(r.macro_precision), percent(r.macro_recall), percent(r.macro_f1), total);
  row("Weighted Avg", percent(r.weighted_precision), percent(r.weighted_recall), percent(r.weighted_f1), total);
  row("Micro F1-Score", "", "", percent(r.micro_f1), total);
  return os.str();
}

/// Header of predicted labels, then one row per actual label.
inline std::string render_csv(const ConfusionMatrix& cm, const std::vector<std::string>& labels) {
  detail::check_labels(labels, cm.n_classes());
  std::ostringstream os;
  os << "actual\\predicted";
  for (const auto& l : labels) os << ',' << detail::csv_field(l);
  os << '\n';
  for (std::size_t i = 0; i < cm.n_classes(); ++i) {
    os << detail::csv_field(labels[i]);
    for (std::size_t j = 0; j < cm.n_classes(); ++j) os << ',' << cm.at(i, j);
    os << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json metric_json(const Rational& r) {
  nlohmann::ordered_json j;
  j["exact"] = to_string(r);
  j["value"] = to_double(r);
  return j;
}

inline nlohmann::ordered_json report_json(const MetricsReport& r, const ConfusionMatrix& cm,
                                          const std::vector<std::string>& labels) {
  detail::check_labels(labels, cm.n_classes());
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["labels"] = labels;
  j["total"] = r.total;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cm.n_classes(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < cm.n_classes(); ++k) row.push_back(cm.at(i, k));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  auto classes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.n_classes; ++i) {
    nlohmann::ordered_json c;
    c["label"] = labels[i];
    c["support"] = r.classes[i].support;
    c["precision"] = metric_json(r.classes[i].precision);
    c["recall"] = metric_json(r.classes[i].recall);
    c["f1"] = metric_json(r.classes[i].f1);
    classes.push_back(c);
  }
  j["per_class"] = classes;
  j["accuracy"] = metric_json(r.accuracy);
  j["micro_f1"] = metric_json(r.micro_f1);
  j["macro"] = {{"precision", metric_json(r.macro_precision)},
                {"recall", metric_json(r.macro_recall)},
                {"f1", metric_json(r.macro_f1)}};
  j["weighted"] = {{"precision", metric_json(r.weighted_precision)},
                   {"recall", metric_json(r.weighted_recall)},
                   {"f1", metric_json(r.weighted_f1)}};
  return j;
}

inline std::string render_json(const MetricsReport& r, const ConfusionMatrix& cm,
                               const std::vector<std::string>& labels) {
  return report_json(r, cm, labels).dump(2) + "\n";
}

struct ParsedReport {
  std::vector<std::string> labels;
  ConfusionMatrix confusion;
  MetricsReport report;
};

/// Rebuilds a report from its JSON form. The matrix is authoritative; the
/// stored metrics must agree with the ones recomputed from it.
inline ParsedReport parse_report_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report json: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kReportSchema)
      throw DataError("report json: unsupported schema '" + j.at("schema").get<std::string>() + "'");
    ParsedReport out;
    out.labels = j.at("labels").get<std::vector<std::string>>();
    const std::size_t n = out.labels.size();
    const auto& rows = j.at("confusion");
    if (rows.size() != n) throw DataError("report json: confusion matrix is not " + std::to_string(n) + "x" +
                                          std::to_string(n));
    ConfusionMatrix cm(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) throw DataError("report json: confusion row " + std::to_string(i) + " has wrong width");
      for (std::size_t k = 0; k < n; ++k) cm.at(i, k) = rows[i][k].get<Count>();
    }
    out.confusion = cm;
    out.report = aggregate(cm);
    if (report_json(out.report, cm, out.labels) != j)
      throw DataError("report json: stored metrics disagree with the confusion matrix");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report json: ") + e.what());
  }
}

}  // namespace meder::metrics
