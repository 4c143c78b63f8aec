#pragma once

// Training loop, evaluation, prediction and the single-vs-ensemble comparison.

#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meder/errors.hpp"
#include "meder/metrics.hpp"
#include "meder/model.hpp"
#include "meder/optim.hpp"
#include "meder/pipeline.hpp"
#include "meder/report.hpp"

namespace meder {

struct TrainConfig {
  double learning_rate = 2e-4;
  std::size_t batch_size = 32;
  std::size_t max_len = 484;
  std::size_t epochs = 40;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  /// Validation every this many optimizer steps, in addition to every epoch end; 0 = epoch ends only.
  std::size_t eval_every = 0;
  /// Stop after this many epochs without a validation accuracy gain; 0 = off.
  std::size_t patience = 0;
  /// Stop at the end of the first epoch with 100% training accuracy.
  bool stop_on_perfect_train = false;
  /// Put the best-validation parameters back into the model when training ends.
  bool restore_best = true;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw UsageError("train: learning rate must be a finite non-negative number");
    if (batch_size < 1) throw UsageError("train: batch size must be at least 1");
    if (epochs < 1) throw UsageError("train: epochs must be at least 1");
    if (!(weight_decay >= 0.0)) throw UsageError("train: weight decay must be non-negative");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_step_loss = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;

  bool operator==(const EpochRecord&) const = default;
};

struct StepEval {
  std::size_t step = 0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  bool operator==(const StepEval&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<StepEval> step_evals;
  std::size_t steps = 0;
  /// Epoch (1-based) whose parameters were kept; 0 when no validation ran.
  std::size_t best_epoch = 0;
  std::size_t best_step = 0;
  std::optional<double> best_val_accuracy;
  std::string stop_reason = "epochs";

  bool operator==(const TrainHistory&) const = default;
};

inline constexpr const char* kHistorySchema = "meder.history/1";

namespace detail {

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::optional<double> optional_from(const nlohmann::ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::ordered_json history_json(const TrainHistory& h) {
  nlohmann::ordered_json j;
  j["schema"] = kHistorySchema;
  j["steps"] = h.steps;
  j["best_epoch"] = h.best_epoch;
  j["best_step"] = h.best_step;
  j["best_val_accuracy"] = detail::optional_json(h.best_val_accuracy);
  j["stop_reason"] = h.stop_reason;
  auto epochs = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    nlohmann::ordered_json r;
    r["epoch"] = e.epoch;
    r["mean_step_loss"] = e.mean_step_loss;
    r["train_loss"] = e.train_loss;
    r["train_accuracy"] = e.train_accuracy;
    r["val_loss"] = detail::optional_json(e.val_loss);
    r["val_accuracy"] = detail::optional_json(e.val_accuracy);
    epochs.push_back(r);
  }
  j["epochs"] = epochs;
  auto evals = nlohmann::ordered_json::array();
  for (const auto& s : h.step_evals) evals.push_back({{"step", s.step}, {"val_loss", s.val_loss},
                                                      {"val_accuracy", s.val_accuracy}});
  j["step_evals"] = evals;
  return j;
}

inline TrainHistory history_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("schema").get<std::string>() != kHistorySchema) throw DataError("history json: unsupported schema");
    TrainHistory h;
    h.steps = j.at("steps").get<std::size_t>();
    h.best_epoch = j.at("best_epoch").get<std::size_t>();
    h.best_step = j.at("best_step").get<std::size_t>();
    h.best_val_accuracy = detail::optional_from(j.at("best_val_accuracy"));
    h.stop_reason = j.at("stop_reason").get<std::string>();
    for (const auto& r : j.at("epochs")) {
      EpochRecord e;
      e.epoch = r.at("epoch").get<std::size_t>();
      e.mean_step_loss = r.at("mean_step_loss").get<double>();
      e.train_loss = r.at("train_loss").get<double>();
      e.train_accuracy = r.at("train_accuracy").get<double>();
      e.val_loss = detail::optional_from(r.at("val_loss"));
      e.val_accuracy = detail::optional_from(r.at("val_accuracy"));
      h.epochs.push_back(e);
    }
    for (const auto& s : j.at("step_evals"))
      h.step_evals.push_back({s.at("step").get<std::size_t>(), s.at("val_loss").get<double>(),
                              s.at("val_accuracy").get<double>()});
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("history json: ") + e.what());
  }
}

/// Eval-mode logits of every sample, in input order.
template <typename Model>
std::vector<std::vector<double>> infer_logits(Model& m, const std::vector<PairSample>& samples,
                                              std::size_t batch_size = 64) {
  using T = typename Model::value_type;
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  for (const Batch& b : batchify(samples, batch_size)) {
    Tape<T> tape;
    const Tensor<T>& z = m.logits(tape, b, ForwardContext<T>::eval()).value();
    const std::size_t c = z.dim(1);
    for (std::size_t r = 0; r < b.size(); ++r) out.emplace_back(z.ptr() + r * c, z.ptr() + (r + 1) * c);
  }
  return out;
}

/// Argmax with ties going to the lowest label id.
inline int predict_label(const std::vector<double>& logits) {
  return static_cast<int>(num::argmax(std::span<const double>(logits)));
}

inline double example_loss(const std::vector<double>& logits, int label) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double se = 0.0;
  for (double z : logits) se += std::exp(z - mx);
  return std::log(se) + mx - logits[static_cast<std::size_t>(label)];
}

struct Evaluation {
  std::vector<int> golds;
  std::vector<int> preds;
  double loss = 0.0;
  metrics::ConfusionMatrix confusion;
  metrics::MetricsReport report;
};

template <typename Model>
Evaluation evaluate(Model& m, const std::vector<PairSample>& samples) {
  if (samples.empty()) throw DataError("evaluate: no samples");
  Evaluation e;
  const auto logits = infer_logits(m, samples);
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int gold = samples[i].first.label_id;
    e.golds.push_back(gold);
    e.preds.push_back(predict_label(logits[i]));
    loss += example_loss(logits[i], gold);
  }
  e.loss = loss / static_cast<double>(samples.size());
  e.confusion = metrics::confusion(e.golds, e.preds, m.config().n_classes);
  e.report = metrics::aggregate(e.confusion);
  return e;
}

namespace detail {

/// Mean loss and accuracy in eval mode.
template <typename Model>
std::pair<double, double> loss_and_accuracy(Model& m, const std::vector<PairSample>& samples) {
  const auto logits = infer_logits(m, samples);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int gold = samples[i].first.label_id;
    loss += example_loss(logits[i], gold);
    if (predict_label(logits[i]) == gold) ++correct;
  }
  const auto n = static_cast<double>(samples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace detail

/// Mini-batch AdamW on mean cross-entropy. Each epoch visits the training
/// samples in a freshly shuffled order drawn from `cfg.seed`.
template <typename Model>
TrainHistory train(Model& m, const std::vector<PairSample>& train_set, const std::vector<PairSample>& val_set,
                   const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  using T = typename Model::value_type;
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty training set");

  auto params = m.parameters();
  AdamW<T> opt(params, {cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng order_rng(cfg.seed);
  Rng dropout_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

  TrainHistory h;
  std::vector<Tensor<T>> best;
  std::size_t since_best = 0;

  auto validate_now = [&](std::size_t epoch) -> std::optional<std::pair<double, double>> {
    if (val_set.empty()) return std::nullopt;
    auto [loss, acc] = detail::loss_and_accuracy(m, val_set);
    if (!h.best_val_accuracy || acc > *h.best_val_accuracy) {
      h.best_val_accuracy = acc;
      h.best_epoch = epoch;
      h.best_step = h.steps;
      best.clear();
      for (auto* p : params) best.push_back(p->value);
    }
    return std::make_pair(loss, acc);
  };

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order);
    double step_loss_sum = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const PairSample*> chunk;
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        chunk.push_back(&train_set[order[k]]);
      const Batch batch = make_batch(chunk);

      opt.zero_grad();
      Tape<T> tape;
      const auto ctx = ForwardContext<T>::train(m.config().dropout, dropout_rng);
      Var<T> loss = num::cross_entropy(m.logits(tape, batch, ctx), batch.labels);
      const double lv = static_cast<double>(loss.value().item());
      ++h.steps;
      if (!std::isfinite(lv))
        throw NumericError("training diverged at step " + std::to_string(h.steps) + " (epoch " +
                           std::to_string(epoch) + "): loss is " + std::to_string(lv));
      tape.backward(loss);
      opt.step();
      step_loss_sum += lv;
      ++epoch_steps;

      if (cfg.eval_every > 0 && h.steps % cfg.eval_every == 0)
        if (auto v = validate_now(epoch)) h.step_evals.push_back({h.steps, v->first, v->second});
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_step_loss = step_loss_sum / static_cast<double>(epoch_steps);
    std::tie(rec.train_loss, rec.train_accuracy) = detail::loss_and_accuracy(m, train_set);
    if (!std::isfinite(rec.train_loss))
      throw NumericError("training diverged by step " + std::to_string(h.steps) + " (epoch " +
                         std::to_string(epoch) + "): evaluation loss is not finite");
    if (auto v = validate_now(epoch)) {
      rec.val_loss = v->first;
      rec.val_accuracy = v->second;
    }
    h.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (cfg.stop_on_perfect_train && rec.train_accuracy == 1.0) {
      h.stop_reason = "perfect-train-accuracy";
      break;
    }
    if (!val_set.empty() && cfg.patience > 0) {
      since_best = h.best_epoch == epoch ? 0 : since_best + 1;
      if (since_best >= cfg.patience) {
        h.stop_reason = "patience";
        break;
      }
    }
  }

  if (cfg.restore_best && !best.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return h;
}

// ---------------------------------------------------------------------------
// Prediction

struct Prediction {
  int label_id = 0;
  std::string label;
  std::vector<double> probabilities;

  bool operator==(const Prediction&) const = default;
};

template <typename T>
std::vector<double> sample_logits(SingleModel<T>& m, const PairSample& s) {
  const auto z = forward_single(m, m.order() == Order::TextFirst ? s.first : s.second);
  return {z.begin(), z.end()};
}

template <typename T>
std::vector<double> sample_logits(EnsembleModel<T>& m, const PairSample& s) {
  const auto z = forward_ensemble(m, s.first, s.second);
  return {z.begin(), z.end()};
}

inline Prediction prediction_from_logits(const std::vector<double>& logits, const LabelSet& labels) {
  if (labels.size() != logits.size())
    throw DataError("predict: model has " + std::to_string(logits.size()) + " classes but the label set has " +
                    std::to_string(labels.size()));
  Prediction p;
  p.label_id = predict_label(logits);
  p.label = labels.name(p.label_id);
  p.probabilities = num::softmax_row(std::span<const double>(logits));
  return p;
}

/// Full pipeline for one observation: preprocess, tokenize, pack, forward.
template <typename Model>
Prediction predict(Model& m, const Vocab& vocab, const PrepConfig& prep, const LabelSet& labels,
                   const std::string& text, const std::string& entity) {
  RawRecord raw{"input", unicode::nfc(text), unicode::nfc(entity), "", 0};
  const PairSample s = encode_clean(preprocess_record(raw, prep), vocab, m.config().max_len);
  return prediction_from_logits(sample_logits(m, s), labels);
}

// ---------------------------------------------------------------------------
// Single-encoder vs ensemble comparison

struct PreparedSplits {
  std::vector<PairSample> train, val, test;
  std::string fp_train, fp_val, fp_test;
};

struct ArmResult {
  std::string name;   // "single" or "ensemble"
  std::string order;  // input order consumed
  std::size_t parameters = 0;
  std::string fp_train, fp_val, fp_test;
  TrainHistory history;
  metrics::ConfusionMatrix confusion;
  metrics::MetricsReport report;
};

struct MetricDelta {
  std::string name;
  metrics::Rational single, ensemble, delta;
};

struct ComparisonReport {
  std::vector<std::string> labels;
  std::string eval_split;
  ArmResult single, ensemble;
  std::vector<MetricDelta> deltas;
};

inline constexpr const char* kComparisonSchema = "meder.comparison/1";

/// Ensemble minus single for every aggregate and per-class metric.
inline std::vector<MetricDelta> metric_deltas(const metrics::MetricsReport& a, const metrics::MetricsReport& b,
                                              const std::vector<std::string>& labels) {
  std::vector<MetricDelta> out;
  auto add = [&](std::string name, const metrics::Rational& x, const metrics::Rational& y) {
    out.push_back({std::move(name), x, y, y - x});
  };
  add("accuracy", a.accuracy, b.accuracy);
  add("micro_f1", a.micro_f1, b.micro_f1);
  add("macro_precision", a.macro_precision, b.macro_precision);
  add("macro_recall", a.macro_recall, b.macro_recall);
  add("macro_f1", a.macro_f1, b.macro_f1);
  add("weighted_precision", a.weighted_precision, b.weighted_precision);
  add("weighted_recall", a.weighted_recall, b.weighted_recall);
  add("weighted_f1", a.weighted_f1, b.weighted_f1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    add(labels[i] + "/precision", a.classes[i].precision, b.classes[i].precision);
    add(labels[i] + "/recall", a.classes[i].recall, b.classes[i].recall);
    add(labels[i] + "/f1", a.classes[i].f1, b.classes[i].f1);
  }
  return out;
}

inline nlohmann::ordered_json arm_json(const ArmResult& a, const std::vector<std::string>& labels) {
  nlohmann::ordered_json j;
  j["name"] = a.name;
  j["order"] = a.order;
  j["parameters"] = a.parameters;
  j["fingerprints"] = {{"train", a.fp_train}, {"val", a.fp_val}, {"test", a.fp_test}};
  j["metrics"] = metrics::report_json(a.report, a.confusion, labels);
  j["history"] = history_json(a.history);
  return j;
}

inline nlohmann::ordered_json comparison_json(const ComparisonReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = kComparisonSchema;
  j["labels"] = r.labels;
  j["eval_split"] = r.eval_split;
  j["arms"] = {arm_json(r.single, r.labels), arm_json(r.ensemble, r.labels)};
  auto d = nlohmann::ordered_json::array();
  for (const auto& m : r.deltas)
    d.push_back({{"metric", m.name},
                 {"single", metrics::metric_json(m.single)},
                 {"ensemble", metrics::metric_json(m.ensemble)},
                 {"delta", metrics::metric_json(m.delta)}});
  j["deltas"] = d;
  return j;
}

inline std::string render_comparison(const ComparisonReport& r) { return comparison_json(r).dump(2) + "\n"; }

/// Parses a comparison report. Arms are rebuilt from their confusion
/// matrices and deltas recomputed; any stored value that disagrees is an error.
inline ComparisonReport parse_comparison(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("comparison json: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kComparisonSchema)
      throw DataError("comparison json: unsupported schema");
    ComparisonReport r;
    r.labels = j.at("labels").get<std::vector<std::string>>();
    r.eval_split = j.at("eval_split").get<std::string>();
    const auto& arms = j.at("arms");
    if (arms.size() != 2) throw DataError("comparison json: expected two arms");
    auto read_arm = [&](const nlohmann::ordered_json& a) {
      ArmResult out;
      out.name = a.at("name").get<std::string>();
      out.order = a.at("order").get<std::string>();
      out.parameters = a.at("parameters").get<std::size_t>();
      out.fp_train = a.at("fingerprints").at("train").get<std::string>();
      out.fp_val = a.at("fingerprints").at("val").get<std::string>();
      out.fp_test = a.at("fingerprints").at("test").get<std::string>();
      auto parsed = metrics::parse_report_json(a.at("metrics").dump());
      if (parsed.labels != r.labels) throw DataError("comparison json: arm labels differ from report labels");
      out.confusion = parsed.confusion;
      out.report = parsed.report;
      out.history = history_from_json(a.at("history"));
      return out;
    };
    r.single = read_arm(arms[0]);
    r.ensemble = read_arm(arms[1]);
    r.deltas = metric_deltas(r.single.report, r.ensemble.report, r.labels);
    if (comparison_json(r) != j) throw DataError("comparison json: stored values are inconsistent");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("comparison json: ") + e.what());
  }
}

/// Trains a single encoder and the ensemble on identical splits and scores both
/// on the test split (validation, then train, when it is empty).
template <typename T = float>
ComparisonReport compare(const ModelConfig& single_cfg, const ModelConfig& ensemble_cfg, const PreparedSplits& data,
                         const TrainConfig& cfg, const std::vector<std::string>& labels,
                         const std::function<void(const std::string&, const EpochRecord&)>& on_epoch = {},
                         Order single_order = Order::TextFirst) {
  ComparisonReport r;
  r.labels = labels;
  const std::vector<PairSample>* eval_set = &data.test;
  r.eval_split = "test";
  if (eval_set->empty()) {
    eval_set = &data.val;
    r.eval_split = "val";
  }
  if (eval_set->empty()) {
    eval_set = &data.train;
    r.eval_split = "train";
  }

  auto run_arm = [&](auto& model, const std::string& name, const std::string& order) {
    ArmResult a;
    a.name = name;
    a.order = order;
    a.parameters = count_parameters(model);
    a.fp_train = data.fp_train;
    a.fp_val = data.fp_val;
    a.fp_test = data.fp_test;
    std::function<void(const EpochRecord&)> cb;
    if (on_epoch) cb = [&](const EpochRecord& e) { on_epoch(name, e); };
    a.history = train(model, data.train, data.val, cfg, cb);
    Evaluation e = evaluate(model, *eval_set);
    a.confusion = e.confusion;
    a.report = e.report;
    return a;
  };

  SingleModel<T> single(single_cfg, single_order);
  r.single = run_arm(single, "single", to_string(single_order));
  EnsembleModel<T> ensemble(ensemble_cfg);
  r.ensemble = run_arm(ensemble, "ensemble", "both");
  r.deltas = metric_deltas(r.single.report, r.ensemble.report, labels);
  return r;
}

}  // namespace meder
