#pragma once

// Run configuration: flat `key = value` text with `#` comments. Every key is
// written by to_text(), and parse(to_text(c)) == c.

#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "meder/checkpoint.hpp"
#include "meder/corpus.hpp"
#include "meder/errors.hpp"
#include "meder/model.hpp"
#include "meder/trainer.hpp"

#ifndef MEDER_DATA_DIR
#define MEDER_DATA_DIR "data"
#endif

namespace meder {

struct RunConfig {
  // paths
  std::string corpus;
  std::string labels;
  std::string vocab;
  std::string checkpoint;
  std::string out_dir = "meder_out";
  std::string stopwords = std::string(MEDER_DATA_DIR) + "/stopwords_bn.txt";
  std::string suffixes = std::string(MEDER_DATA_DIR) + "/suffixes_bn.tsv";

  // preprocessing
  bool enable_stopwords = true;
  bool enable_stemming = true;
  int max_passes = 1;
  std::size_t min_stem_length = 2;

  // tokenizer
  std::size_t vocab_size = 8000;
  std::size_t min_freq = 2;

  // splits
  Fraction train_frac{8, 10};
  Fraction val_frac{1, 10};
  Fraction test_frac{1, 10};
  bool stratified = true;
  std::string eval_split = "test";

  // model: "both" trains the ensemble, a single order trains one encoder
  std::string order = "both";
  ModelConfig model;
  TrainConfig train;

  std::uint64_t seed = 42;
  std::optional<std::size_t> declared_total;

  bool operator==(const RunConfig& o) const { return to_text() == o.to_text(); }

  SplitSpec split_spec() const { return {train_frac, val_frac, test_frac, seed, stratified}; }

  /// Model settings with the run seed and max_len applied.
  ModelConfig model_config(std::size_t vocab_size_actual, std::size_t n_classes) const {
    ModelConfig c = model;
    c.vocab_size = vocab_size_actual;
    c.n_classes = n_classes;
    c.seed = seed;
    return c;
  }

  TrainConfig train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    t.max_len = model.max_len;
    return t;
  }

  void validate() const {
    if (order != "both" && order != "text-first" && order != "entity-first")
      throw UsageError("order must be both, text-first or entity-first");
    if (eval_split != "test" && eval_split != "val" && eval_split != "train" && eval_split != "all")
      throw UsageError("eval_split must be test, val, train or all");
    split_spec().validate();
    train.validate();
    if (min_freq < 1) throw UsageError("min_freq must be at least 1");
  }

  std::string to_text() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  void set(const std::string& key, const std::string& value);
  static const std::vector<std::string>& keys();
};

namespace detail {

inline std::string fraction_text(const Fraction& f) {
  return f.denominator() == 1 ? std::to_string(f.numerator())
                              : std::to_string(f.numerator()) + "/" + std::to_string(f.denominator());
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError(key + ": expected true or false, got '" + v + "'");
}

inline std::uint64_t parse_count(const std::string& v, const std::string& key) {
  try {
    return parse_uint(v, key);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

inline double parse_real(const std::string& v, const std::string& key) {
  try {
    return parse_double(v, key);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<Field>& fields() {
  using C = RunConfig;
  using S = std::string;
  static const std::vector<Field> f = {
      {"corpus", [](const C& c) { return c.corpus; }, [](C& c, const S& v) { c.corpus = v; }},
      {"labels", [](const C& c) { return c.labels; }, [](C& c, const S& v) { c.labels = v; }},
      {"vocab", [](const C& c) { return c.vocab; }, [](C& c, const S& v) { c.vocab = v; }},
      {"checkpoint", [](const C& c) { return c.checkpoint; }, [](C& c, const S& v) { c.checkpoint = v; }},
      {"out_dir", [](const C& c) { return c.out_dir; }, [](C& c, const S& v) { c.out_dir = v; }},
      {"stopwords", [](const C& c) { return c.stopwords; }, [](C& c, const S& v) { c.stopwords = v; }},
      {"suffixes", [](const C& c) { return c.suffixes; }, [](C& c, const S& v) { c.suffixes = v; }},
      {"enable_stopwords", [](const C& c) { return S(c.enable_stopwords ? "true" : "false"); },
       [](C& c, const S& v) { c.enable_stopwords = parse_bool(v, "enable_stopwords"); }},
      {"enable_stemming", [](const C& c) { return S(c.enable_stemming ? "true" : "false"); },
       [](C& c, const S& v) { c.enable_stemming = parse_bool(v, "enable_stemming"); }},
      {"max_passes", [](const C& c) { return std::to_string(c.max_passes); },
       [](C& c, const S& v) { c.max_passes = static_cast<int>(parse_count(v, "max_passes")); }},
      {"min_stem_length", [](const C& c) { return std::to_string(c.min_stem_length); },
       [](C& c, const S& v) { c.min_stem_length = parse_count(v, "min_stem_length"); }},
      {"vocab_size", [](const C& c) { return std::to_string(c.vocab_size); },
       [](C& c, const S& v) { c.vocab_size = parse_count(v, "vocab_size"); }},
      {"min_freq", [](const C& c) { return std::to_string(c.min_freq); },
       [](C& c, const S& v) { c.min_freq = parse_count(v, "min_freq"); }},
      {"train_frac", [](const C& c) { return fraction_text(c.train_frac); },
       [](C& c, const S& v) { c.train_frac = parse_fraction(v); }},
      {"val_frac", [](const C& c) { return fraction_text(c.val_frac); },
       [](C& c, const S& v) { c.val_frac = parse_fraction(v); }},
      {"test_frac", [](const C& c) { return fraction_text(c.test_frac); },
       [](C& c, const S& v) { c.test_frac = parse_fraction(v); }},
      {"stratified", [](const C& c) { return S(c.stratified ? "true" : "false"); },
       [](C& c, const S& v) { c.stratified = parse_bool(v, "stratified"); }},
      {"eval_split", [](const C& c) { return c.eval_split; }, [](C& c, const S& v) { c.eval_split = v; }},
      {"order", [](const C& c) { return c.order; }, [](C& c, const S& v) { c.order = v; }},
      {"max_len", [](const C& c) { return std::to_string(c.model.max_len); },
       [](C& c, const S& v) { c.model.max_len = parse_count(v, "max_len"); }},
      {"d_model", [](const C& c) { return std::to_string(c.model.d_model); },
       [](C& c, const S& v) { c.model.d_model = parse_count(v, "d_model"); }},
      {"n_heads", [](const C& c) { return std::to_string(c.model.n_heads); },
       [](C& c, const S& v) { c.model.n_heads = parse_count(v, "n_heads"); }},
      {"n_layers", [](const C& c) { return std::to_string(c.model.n_layers); },
       [](C& c, const S& v) { c.model.n_layers = parse_count(v, "n_layers"); }},
      {"d_ff", [](const C& c) { return std::to_string(c.model.d_ff); },
       [](C& c, const S& v) { c.model.d_ff = parse_count(v, "d_ff"); }},
      {"d_hidden", [](const C& c) { return std::to_string(c.model.d_hidden); },
       [](C& c, const S& v) { c.model.d_hidden = parse_count(v, "d_hidden"); }},
      {"dropout", [](const C& c) { return format_double(c.model.dropout); },
       [](C& c, const S& v) { c.model.dropout = parse_real(v, "dropout"); }},
      {"init_std", [](const C& c) { return format_double(c.model.init_std); },
       [](C& c, const S& v) { c.model.init_std = parse_real(v, "init_std"); }},
      {"lr", [](const C& c) { return format_double(c.train.learning_rate); },
       [](C& c, const S& v) { c.train.learning_rate = parse_real(v, "lr"); }},
      {"batch_size", [](const C& c) { return std::to_string(c.train.batch_size); },
       [](C& c, const S& v) { c.train.batch_size = parse_count(v, "batch_size"); }},
      {"epochs", [](const C& c) { return std::to_string(c.train.epochs); },
       [](C& c, const S& v) { c.train.epochs = parse_count(v, "epochs"); }},
      {"weight_decay", [](const C& c) { return format_double(c.train.weight_decay); },
       [](C& c, const S& v) { c.train.weight_decay = parse_real(v, "weight_decay"); }},
      {"eval_every", [](const C& c) { return std::to_string(c.train.eval_every); },
       [](C& c, const S& v) { c.train.eval_every = parse_count(v, "eval_every"); }},
      {"patience", [](const C& c) { return std::to_string(c.train.patience); },
       [](C& c, const S& v) { c.train.patience = parse_count(v, "patience"); }},
      {"stop_on_perfect_train", [](const C& c) { return S(c.train.stop_on_perfect_train ? "true" : "false"); },
       [](C& c, const S& v) { c.train.stop_on_perfect_train = parse_bool(v, "stop_on_perfect_train"); }},
      {"restore_best", [](const C& c) { return S(c.train.restore_best ? "true" : "false"); },
       [](C& c, const S& v) { c.train.restore_best = parse_bool(v, "restore_best"); }},
      {"seed", [](const C& c) { return std::to_string(c.seed); },
       [](C& c, const S& v) { c.seed = parse_count(v, "seed"); }},
      {"declared_total", [](const C& c) { return c.declared_total ? std::to_string(*c.declared_total) : S(); },
       [](C& c, const S& v) {
         if (v.empty()) c.declared_total.reset();
         else c.declared_total = parse_count(v, "declared_total");
       }},
  };
  return f;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : detail::fields()) out.push_back(f.key);
    return out;
  }();
  return k;
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : detail::fields())
    if (key == f.key) {
      try {
        f.set(*this, value);
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception& e) {
        throw UsageError(key + ": " + e.what());
      }
      return;
    }
  throw UsageError("unknown config key '" + key + "'");
}

inline std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& f : detail::fields()) os << f.key << " = " << f.get(*this) << '\n';
  return os.str();
}

inline RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      c.set(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace meder
