#pragma once

// Command-line front end: prepare | stats | vocab | train | eval | predict |
// compare | gradcheck. Exit codes: 0 ok, 1 usage, 2 data, 3 numeric.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meder/checkpoint.hpp"
#include "meder/config.hpp"
#include "meder/corpus.hpp"
#include "meder/csv.hpp"
#include "meder/errors.hpp"
#include "meder/metrics.hpp"
#include "meder/model.hpp"
#include "meder/num/gradcheck.hpp"
#include "meder/pipeline.hpp"
#include "meder/report.hpp"
#include "meder/textprep.hpp"
#include "meder/tokenizer.hpp"
#include "meder/trainer.hpp"

namespace meder::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

inline constexpr double kGradcheckTolerance = 1e-3;

/// Values given on the command line; unset ones leave the config untouched.
struct Flags {
  std::string config;
  std::optional<std::string> corpus, labels, vocab, checkpoint, out_dir, order;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_len, epochs, batch_size, declared_total;
  std::optional<double> lr;
  std::optional<std::string> text, entity;
  std::string input, delimiter;
  std::vector<std::string> set;
};

namespace detail {

namespace fs = std::filesystem;

inline RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.corpus) c.corpus = *f.corpus;
  if (f.labels) c.labels = *f.labels;
  if (f.vocab) c.vocab = *f.vocab;
  if (f.checkpoint) c.checkpoint = *f.checkpoint;
  if (f.out_dir) c.out_dir = *f.out_dir;
  if (f.order) c.order = *f.order;
  if (f.seed) c.seed = *f.seed;
  if (f.max_len) c.model.max_len = *f.max_len;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.lr) c.train.learning_rate = *f.lr;
  if (f.declared_total) c.declared_total = *f.declared_total;
  c.validate();
  return c;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string out_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

inline LabelSet load_labels(const RunConfig& c) {
  return c.labels.empty() ? LabelSet::defaults() : LabelSet::load(c.labels);
}

inline PrepConfig load_prep(const RunConfig& c) {
  PrepConfig p;
  p.enable_stopwords = c.enable_stopwords;
  p.enable_stemming = c.enable_stemming;
  p.max_passes = c.max_passes;
  p.min_stem_length = c.min_stem_length;
  if (!c.stopwords.empty()) p.stopwords = load_stopwords(c.stopwords);
  if (!c.suffixes.empty()) p.suffixes = SuffixTable::load(c.suffixes);
  p.validate();
  return p;
}

inline LoadedCorpus load_records(const RunConfig& c, const LabelSet& labels) {
  if (c.corpus.empty()) throw UsageError("a corpus is required (--corpus or 'corpus' in the config)");
  return load_corpus(c.corpus, labels);
}

/// Corpus, splits, cleaned records and vocabulary shared by train/eval/compare.
struct Workspace {
  LabelSet labels;
  PrepConfig prep;
  Splits splits;
  std::vector<CleanRecord> train, val, test;
  Vocab vocab;
  bool vocab_trained = false;
};

inline Workspace open_workspace(const RunConfig& c, bool need_vocab_file, const LabelSet* labels_override = nullptr) {
  Workspace w;
  w.labels = labels_override ? *labels_override : load_labels(c);
  w.prep = load_prep(c);
  w.splits = split(load_records(c, w.labels).records, c.split_spec());
  w.train = preprocess_all(w.splits.train, w.prep);
  w.val = preprocess_all(w.splits.val, w.prep);
  w.test = preprocess_all(w.splits.test, w.prep);
  if (!c.vocab.empty()) {
    w.vocab = Vocab::load(c.vocab);
  } else if (need_vocab_file) {
    throw UsageError("a vocabulary is required (--vocab or 'vocab' in the config)");
  } else {
    w.vocab = train_vocab(vocab_corpus(w.train), c.vocab_size, c.min_freq);
    w.vocab_trained = true;
  }
  return w;
}

inline std::string vocab_text(const Vocab& v) {
  std::ostringstream os;
  v.save(os);
  return os.str();
}

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline Order order_of(const std::string& s) { return parse_order(s); }

/// Calls `f(model)` with the checkpoint's model type.
template <typename F>
auto with_checkpoint(const std::string& path, F&& f) {
  const CheckpointHeader h = read_checkpoint_header(path);
  if (h.kind == "single") {
    auto m = load_single<float>(path);
    return f(m, h);
  }
  auto m = load_ensemble<float>(path);
  return f(m, h);
}

inline std::string sibling_vocab(const RunConfig& c) {
  if (!c.vocab.empty()) return c.vocab;
  const auto p = fs::path(c.checkpoint).parent_path() / "vocab.txt";
  if (!fs::exists(p)) throw UsageError("a vocabulary is required (--vocab); none found next to the checkpoint");
  return p.string();
}

inline LabelSet checkpoint_labels(const RunConfig& c, const CheckpointHeader& h) {
  if (h.labels.empty()) return load_labels(c);
  LabelSet from_ckpt(h.labels);
  if (!c.labels.empty() && !(LabelSet::load(c.labels) == from_ckpt))
    throw DataError("label file does not match the labels stored in the checkpoint");
  return from_ckpt;
}

inline void print_epoch(std::ostream& out, const std::string& prefix, const EpochRecord& e) {
  out << prefix << "epoch " << e.epoch << "  step_loss " << fixed(e.mean_step_loss, 4) << "  train_loss "
      << fixed(e.train_loss, 4) << "  train_acc " << fixed(100 * e.train_accuracy, 2);
  if (e.val_accuracy) out << "  val_loss " << fixed(*e.val_loss, 4) << "  val_acc " << fixed(100 * *e.val_accuracy, 2);
  out << '\n';
}

// --- subcommands ------------------------------------------------------------

inline int cmd_prepare(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  if (f.input.empty()) throw UsageError("prepare needs --input <raw csv/tsv export>");
  const LabelSet labels = load_labels(c);
  const std::string text = read_file(f.input);
  char delim = sniff_delimiter(text);
  if (f.delimiter == "tab") delim = '\t';
  else if (f.delimiter == "comma") delim = ',';
  else if (!f.delimiter.empty()) throw UsageError("--delimiter must be tab or comma");
  const ImportResult r = import_table(parse_csv(text, delim), labels);

  const std::string corpus_path = out_path(c, "corpus.jsonl");
  std::ostringstream jsonl;
  write_corpus(jsonl, r.records);
  write_file(corpus_path, jsonl.str());

  nlohmann::ordered_json rep;
  rep["input"] = f.input;
  rep["rows_read"] = r.rows_read;
  rep["kept"] = r.records.size();
  rep["dropped"] = r.dropped_total();
  rep["dropped_by_reason"] = r.dropped;
  rep["examples"] = r.examples;
  write_file(out_path(c, "prepare_report.json"), rep.dump(2) + "\n");

  out << "rows read: " << r.rows_read << "\nkept: " << r.records.size() << "\ndropped: " << r.dropped_total() << '\n';
  for (const auto& [reason, n] : r.dropped) out << "  " << reason << ": " << n << '\n';
  out << "wrote " << corpus_path << '\n';
  if (r.records.empty()) throw DataError("prepare: no valid rows");
  return kOk;
}

inline int cmd_stats(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const LabelSet labels = load_labels(c);
  const LoadedCorpus corpus = load_records(c, labels);
  const ClassStats s = class_stats(corpus.records, labels.size());

  std::size_t w = 5;
  for (const auto& n : labels.names()) w = std::max(w, n.size());
  out << std::left << std::setw(static_cast<int>(w + 2)) << "label" << std::right << std::setw(8) << "count"
      << std::setw(10) << "share" << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto share = metrics::ratio(s.counts[i], s.total);
    out << std::left << std::setw(static_cast<int>(w + 2)) << labels.name(static_cast<int>(i)) << std::right
        << std::setw(8) << s.counts[i] << std::setw(9) << metrics::percent(share) << "%\n";
  }
  out << std::left << std::setw(static_cast<int>(w + 2)) << "total" << std::right << std::setw(8) << s.total << '\n';
  out << "entity not in text: " << corpus.entity_not_in_text << '\n';

  const Splits sp = split(corpus.records, c.split_spec());
  out << "split seed " << c.seed << (c.stratified ? " stratified" : " unstratified") << ": train "
      << sp.train.size() << " [" << fingerprint_hex(fingerprint(sp.train)) << "], val " << sp.val.size() << " ["
      << fingerprint_hex(fingerprint(sp.val)) << "], test " << sp.test.size() << " ["
      << fingerprint_hex(fingerprint(sp.test)) << "]\n";
  for (const auto& warning : stats_warnings(s, labels, c.declared_total)) out << "warning: " << warning << '\n';
  return kOk;
}

inline int cmd_vocab(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  RunConfig fresh = c;
  fresh.vocab.clear();
  const Workspace w = open_workspace(fresh, false);
  const std::string path = out_path(c, "vocab.txt");
  write_file(path, vocab_text(w.vocab));
  out << "vocabulary of " << w.vocab.size() << " tokens from " << w.train.size() << " training records\nwrote "
      << path << '\n';
  return kOk;
}

inline int cmd_train(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const Workspace w = open_workspace(c, false);
  const std::size_t max_len = c.model.max_len;
  const auto train_set = encode_all(w.train, w.vocab, max_len);
  const auto val_set = encode_all(w.val, w.vocab, max_len);
  const ModelConfig mc = c.model_config(w.vocab.size(), w.labels.size());
  const TrainConfig tc = c.train_config();
  auto log = [&](const EpochRecord& e) { print_epoch(out, "", e); };

  const std::string ckpt = out_path(c, "model.ckpt");
  TrainHistory h;
  std::optional<Evaluation> val_eval;
  if (c.order == "both") {
    EnsembleModel<float> m(mc);
    out << "training ensemble (" << count_parameters(m) << " parameters) on " << train_set.size() << " records\n";
    h = train(m, train_set, val_set, tc, log);
    save_checkpoint(ckpt, m, w.labels.names());
    if (!val_set.empty()) val_eval = evaluate(m, val_set);
  } else {
    SingleModel<float> m(mc, order_of(c.order));
    out << "training single " << c.order << " encoder (" << count_parameters(m) << " parameters) on "
        << train_set.size() << " records\n";
    h = train(m, train_set, val_set, tc, log);
    save_checkpoint(ckpt, m, w.labels.names());
    if (!val_set.empty()) val_eval = evaluate(m, val_set);
  }
  write_file(out_path(c, "history.json"), history_json(h).dump(2) + "\n");
  write_file(out_path(c, "vocab.txt"), vocab_text(w.vocab));
  RunConfig used = c;
  used.vocab = out_path(c, "vocab.txt");
  used.checkpoint = ckpt;
  write_file(out_path(c, "run.conf"), "# resolved configuration of this run\n" + used.to_text());
  out << "stopped: " << h.stop_reason << " after " << h.epochs.size() << " epochs, " << h.steps << " steps\n";
  if (val_eval)
    out << "validation accuracy " << metrics::percent(val_eval->report.accuracy) << "% (best epoch " << h.best_epoch
        << ")\n";
  out << "wrote " << ckpt << '\n';
  return kOk;
}

inline const std::vector<CleanRecord>& pick_split(const Workspace& w, const std::string& name,
                                                  std::vector<CleanRecord>& all) {
  if (name == "train") return w.train;
  if (name == "val") return w.val;
  if (name == "test") return w.test;
  all = w.train;
  all.insert(all.end(), w.val.begin(), w.val.end());
  all.insert(all.end(), w.test.begin(), w.test.end());
  return all;
}

inline int cmd_eval(const Flags& f, std::ostream& out) {
  RunConfig c = resolve(f);
  if (c.checkpoint.empty()) throw UsageError("eval needs --checkpoint");
  c.vocab = sibling_vocab(c);
  return with_checkpoint(c.checkpoint, [&](auto& m, const CheckpointHeader& h) {
    const LabelSet labels = checkpoint_labels(c, h);
    const Workspace w = open_workspace(c, true, &labels);
    std::vector<CleanRecord> all;
    const auto& records = pick_split(w, c.eval_split, all);
    if (records.empty()) throw DataError("eval: the " + c.eval_split + " split is empty");
    const Evaluation e = evaluate(m, encode_all(records, w.vocab, m.config().max_len));
    const std::string table = metrics::render_table(e.report, labels.names());
    out << "model: " << h.kind << " (" << h.order << "), split: " << c.eval_split << " (" << records.size()
        << " records)\n\n"
        << table;
    write_file(out_path(c, "metrics.txt"), table);
    write_file(out_path(c, "metrics.json"), metrics::render_json(e.report, e.confusion, labels.names()));
    write_file(out_path(c, "confusion.csv"), metrics::render_csv(e.confusion, labels.names()));
    out << "\nwrote metrics.txt, metrics.json and confusion.csv under " << c.out_dir << '\n';
    return static_cast<int>(kOk);
  });
}

inline int cmd_predict(const Flags& f, std::ostream& out) {
  RunConfig c = resolve(f);
  if (c.checkpoint.empty()) throw UsageError("predict needs --checkpoint");
  const Vocab vocab = Vocab::load(sibling_vocab(c));
  const PrepConfig prep = load_prep(c);
  return with_checkpoint(c.checkpoint, [&](auto& m, const CheckpointHeader& h) {
    const LabelSet labels = checkpoint_labels(c, h);
    const Prediction p = predict(m, vocab, prep, labels, *f.text, *f.entity);
    nlohmann::ordered_json j;
    j["label"] = p.label;
    j["label_id"] = p.label_id;
    nlohmann::ordered_json probs;
    for (std::size_t i = 0; i < labels.size(); ++i) probs[labels.name(static_cast<int>(i))] = p.probabilities[i];
    j["probabilities"] = probs;
    out << j.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

inline int cmd_compare(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const Workspace w = open_workspace(c, false);
  PreparedSplits data;
  data.train = encode_all(w.train, w.vocab, c.model.max_len);
  data.val = encode_all(w.val, w.vocab, c.model.max_len);
  data.test = encode_all(w.test, w.vocab, c.model.max_len);
  data.fp_train = fingerprint_hex(fingerprint(w.splits.train));
  data.fp_val = fingerprint_hex(fingerprint(w.splits.val));
  data.fp_test = fingerprint_hex(fingerprint(w.splits.test));
  const ModelConfig mc = c.model_config(w.vocab.size(), w.labels.size());
  const ComparisonReport r = compare<float>(mc, mc, data, c.train_config(), w.labels.names(),
                                            [&](const std::string& arm, const EpochRecord& e) {
                                              print_epoch(out, "[" + arm + "] ", e);
                                            },
                                            c.order == "both" ? Order::TextFirst : order_of(c.order));
  const std::string path = out_path(c, "comparison.json");
  write_file(path, render_comparison(r));
  out << "\nevaluated on " << r.eval_split << "; split fingerprints train " << data.fp_train << " val " << data.fp_val
      << " test " << data.fp_test << "\n";
  out << std::left << std::setw(20) << "metric" << std::right << std::setw(10) << "single" << std::setw(10)
      << "ensemble" << std::setw(10) << "delta" << '\n';
  for (const auto& d : r.deltas) {
    if (d.name.find('/') != std::string::npos) continue;
    out << std::left << std::setw(20) << d.name << std::right << std::setw(10) << metrics::percent(d.single)
        << std::setw(10) << metrics::percent(d.ensemble) << std::setw(10) << metrics::percent(d.delta) << '\n';
  }
  out << "wrote " << path << '\n';
  return kOk;
}

/// The tiny ensemble used for gradient verification.
inline ModelConfig gradcheck_config(std::uint64_t seed, double init_std) {
  ModelConfig c;
  c.vocab_size = 50;
  c.max_len = 16;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 1;
  c.d_ff = 16;
  c.n_classes = 6;
  c.dropout = 0.0;
  c.init_std = init_std;
  c.seed = seed;
  return c;
}

/// Random packed pairs for gradcheck_config: varied text lengths so padding is exercised.
inline Batch gradcheck_batch(std::uint64_t seed, std::size_t n = 4) {
  Rng rng(seed ^ 0xA5A5A5A5ull);
  std::vector<PairSample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TokenId> text(1 + rng.below(9)), entity(1 + rng.below(3));
    for (auto& t : text) t = static_cast<TokenId>(4 + rng.below(46));
    for (auto& t : entity) t = static_cast<TokenId>(4 + rng.below(46));
    samples.push_back(build_both(text, entity, 16, static_cast<int>(rng.below(6))));
  }
  return batchify(samples, n).front();
}

inline num::GradCheckReport run_gradcheck(std::uint64_t seed, double init_std) {
  EnsembleModel<double> m(gradcheck_config(seed, init_std));
  const Batch batch = gradcheck_batch(seed);
  return num::grad_check(
      [&](Tape<double>& tape) {
        return num::cross_entropy(m.logits(tape, batch, ForwardContext<double>::eval()), batch.labels);
      },
      m.parameters(), kGradcheckTolerance);
}

inline int cmd_gradcheck(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const ModelConfig mc = gradcheck_config(c.seed, c.model.init_std);
  out << "gradcheck: ensemble vocab=" << mc.vocab_size << " max_len=" << mc.max_len << " d_model=" << mc.d_model
      << " heads=" << mc.n_heads << " layers=" << mc.n_layers << " d_ff=" << mc.d_ff << " classes=" << mc.n_classes
      << " init_std=" << format_double(mc.init_std) << " seed=" << c.seed << '\n';
  const auto rep = run_gradcheck(c.seed, c.model.init_std);
  std::ostringstream err;
  err << std::scientific << std::setprecision(3) << rep.max_rel_err;
  out << "checked " << rep.checked << " parameter scalars with central differences, h = 1e-4\n";
  out << "max_rel_err = " << err.str() << " at " << rep.worst_param << "[" << rep.worst_index << "]\n";
  if (rep.passed) {
    out << "max_rel_err < 1e-3\n";
    return kOk;
  }
  out << "max_rel_err >= 1e-3\n";
  throw NumericError("gradient check failed");
}

}  // namespace detail

/// Entry point with explicit streams; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bangla medical entity classification with dual-order transformer encoders", "meder"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Flags f;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", f.config, "key = value configuration file (flags override it)");
    s->add_option("--set", f.set, "Override one config key, as key=value (repeatable)");
    s->add_option("--corpus", f.corpus, "Corpus JSONL file");
    s->add_option("--labels", f.labels, "Label file, one name per line (default: the six built-in categories)");
    s->add_option("--out-dir", f.out_dir, "Directory for every file this command writes");
    s->add_option("--seed", f.seed, "Seed for splits, initialization, shuffling and dropout");
  };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--vocab", f.vocab, "Vocabulary file");
    s->add_option("--checkpoint", f.checkpoint, "Model checkpoint");
    s->add_option("--max-len", f.max_len, "Packed sequence length including [CLS] and both [SEP]");
    s->add_option("--order", f.order, "Input order: both (ensemble), text-first or entity-first (single encoder; compare uses it for the single arm)")
        ->check(CLI::IsMember({"both", "text-first", "entity-first"}));
  };
  auto add_training = [&](CLI::App* s) {
    s->add_option("--epochs", f.epochs, "Training epochs");
    s->add_option("--batch-size", f.batch_size, "Mini-batch size");
    s->add_option("--lr", f.lr, "AdamW learning rate");
  };

  auto* prepare = app.add_subcommand("prepare", "Convert a raw CSV/TSV export into corpus JSONL");
  add_common(prepare);
  prepare->add_option("--input", f.input, "Raw CSV or TSV file with text, entity and label columns");
  prepare->add_option("--delimiter", f.delimiter, "Field delimiter: tab or comma (default: detect)");

  auto* stats = app.add_subcommand("stats", "Per-label counts, split sizes and split fingerprints");
  add_common(stats);
  stats->add_option("--declared-total", f.declared_total, "Expected number of observations to check against");

  auto* vocab = app.add_subcommand("vocab", "Induce a subword vocabulary from the training split");
  add_common(vocab);

  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, vocabulary and history");
  add_common(train_cmd);
  add_model(train_cmd);
  add_training(train_cmd);

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a split; writes metrics and confusion CSV");
  add_common(eval);
  add_model(eval);

  auto* predict_cmd = app.add_subcommand("predict", "Classify one entity mention in a statement");
  add_common(predict_cmd);
  add_model(predict_cmd);
  predict_cmd->add_option("--text", f.text, "Medical statement");
  predict_cmd->add_option("--entity", f.entity, "Entity mention to classify");

  auto* compare_cmd = app.add_subcommand("compare", "Train a single encoder and the ensemble on identical splits");
  add_common(compare_cmd);
  add_model(compare_cmd);
  add_training(compare_cmd);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the ensemble gradients");
  add_common(gradcheck);

  std::vector<std::string> argv_store{"meder"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (prepare->parsed()) return detail::cmd_prepare(f, out);
    if (stats->parsed()) return detail::cmd_stats(f, out);
    if (vocab->parsed()) return detail::cmd_vocab(f, out);
    if (train_cmd->parsed()) return detail::cmd_train(f, out);
    if (eval->parsed()) return detail::cmd_eval(f, out);
    if (predict_cmd->parsed()) {
      if (!f.text || !f.entity) {
        err << "predict: both --text and --entity are required\n\n" << predict_cmd->help();
        return kUsage;
      }
      return detail::cmd_predict(f, out);
    }
    if (compare_cmd->parsed()) return detail::cmd_compare(f, out);
    if (gradcheck->parsed()) return detail::cmd_gradcheck(f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace meder::cli
