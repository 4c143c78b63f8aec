#pragma once

// Text cleaning for Bangla medical statements: character elimination,
// whitespace tokenization, stopword removal and suffix-table stemming.

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "meder/corpus.hpp"
#include "meder/errors.hpp"
#include "meder/unicode.hpp"

namespace meder {

struct SuffixRule {
  std::string suffix;
  std::string replacement;
  std::size_t suffix_len = 0;  // in code points
};

/// Longest-first suffix rewrite rules, plus the (form, root) pairs the table
/// file declares about itself via `#test form root` lines.
class SuffixTable {
 public:
  SuffixTable() = default;

  void add(std::string suffix, std::string replacement) {
    suffix = unicode::nfc(suffix);
    replacement = unicode::nfc(replacement);
    if (suffix.empty()) throw DataError("suffix table: empty suffix");
    const std::size_t slen = unicode::length(suffix);
    if (unicode::length(replacement) > slen || replacement.size() > suffix.size())
      throw DataError("suffix table: replacement longer than suffix '" + suffix + "'");
    for (const auto& r : rules_)
      if (r.suffix == suffix) throw DataError("suffix table: duplicate suffix '" + suffix + "'");
    rules_.push_back({std::move(suffix), std::move(replacement), slen});
    std::stable_sort(rules_.begin(), rules_.end(), [](const SuffixRule& a, const SuffixRule& b) {
      if (a.suffix_len != b.suffix_len) return a.suffix_len > b.suffix_len;
      return a.suffix < b.suffix;
    });
  }

  static SuffixTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open suffix table: " + path);
    SuffixTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.rfind("#test", 0) == 0) {
        std::istringstream ss(line.substr(5));
        std::string form, root, extra;
        if (!(ss >> form >> root) || (ss >> extra))
          throw DataError(path + ":" + std::to_string(line_no) + ": expected '#test form root'");
        t.tests_.emplace_back(unicode::nfc(form), unicode::nfc(root));
        continue;
      }
      if (line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw DataError(path + ":" + std::to_string(line_no) + ": expected 'suffix<TAB>replacement'");
      try {
        t.add(line.substr(0, tab), line.substr(tab + 1));
      } catch (const DataError& e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    return t;
  }

  const std::vector<SuffixRule>& rules() const { return rules_; }
  const std::vector<std::pair<std::string, std::string>>& self_tests() const { return tests_; }
  bool empty() const { return rules_.empty(); }

 private:
  std::vector<SuffixRule> rules_;
  std::vector<std::pair<std::string, std::string>> tests_;
};

inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file: " + path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    out.insert(unicode::nfc(line.substr(b)));
  }
  return out;
}

/// ASCII punctuation, the Bangla danda and double danda, and common
/// typographic quotes and dashes.
inline std::set<char32_t> default_strip_charset() {
  std::set<char32_t> s;
  for (char32_t c = 0x21; c <= 0x7E; ++c) {
    const bool alnum = (c >= U'0' && c <= U'9') || (c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z');
    if (!alnum) s.insert(c);
  }
  for (char32_t c : {U'।', U'॥', U'‘', U'’', U'“', U'”', U'–',
                     U'—', U'…', U'·', U'•'})
    s.insert(c);
  return s;
}

struct PrepConfig {
  std::set<char32_t> strip_charset = default_strip_charset();
  std::unordered_set<std::string> stopwords;
  SuffixTable suffixes;
  bool enable_stopwords = true;
  bool enable_stemming = true;
  int max_passes = 1;
  /// A rule never leaves fewer code points than this.
  std::size_t min_stem_length = 2;

  void validate() const {
    for (char32_t c : strip_charset) {
      if (unicode::is_bangla_letter_block(c))
        throw UsageError("strip charset must not contain Bangla block code points");
      if (c >= U'0' && c <= U'9') throw UsageError("strip charset must not contain ASCII digits");
    }
    if (max_passes < 0) throw UsageError("max_passes must be non-negative");
    if (min_stem_length < 1) throw UsageError("min_stem_length must be at least 1");
  }
};

/// NFC, then delete strip_charset code points, collapse whitespace runs to one
/// space and trim. Repeats until a fixed point so the result is NFC even when
/// a deletion lets neighbours compose.
inline std::string clean_text(std::string_view raw, const PrepConfig& cfg) {
  std::string current = unicode::nfc(raw);
  for (int iter = 0; iter < 16; ++iter) {
    std::string out;
    out.reserve(current.size());
    bool pending_space = false;
    for (char32_t c : unicode::code_points(current)) {
      if (cfg.strip_charset.count(c)) continue;
      if (unicode::is_space(c)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      unicode::append_utf8(out, c);
    }
    std::string next = unicode::nfc(out);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

/// Splits cleaned text on single spaces.
inline std::vector<std::string> whitespace_tokenize(std::string_view cleaned) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    std::size_t j = i;
    while (j < cleaned.size() && cleaned[j] != ' ') ++j;
    if (j > i) out.emplace_back(cleaned.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                                 const PrepConfig& cfg) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens)
    if (!cfg.stopwords.count(t)) out.push_back(t);
  return out;
}

inline std::string normalize_word(std::string_view word, const PrepConfig& cfg) {
  std::string w(word);
  for (int pass = 0; pass < cfg.max_passes; ++pass) {
    const std::size_t len = unicode::length(w);
    const SuffixRule* hit = nullptr;
    for (const auto& rule : cfg.suffixes.rules()) {
      if (rule.suffix_len >= len || len - rule.suffix_len < cfg.min_stem_length) continue;
      if (w.size() >= rule.suffix.size() &&
          w.compare(w.size() - rule.suffix.size(), rule.suffix.size(), rule.suffix) == 0) {
        hit = &rule;
        break;
      }
    }
    if (!hit) break;
    std::string next = unicode::nfc(w.substr(0, w.size() - hit->suffix.size()) + hit->replacement);
    if (next == w) break;
    w = std::move(next);
  }
  return w;
}

struct CleanRecord {
  std::string id;
  std::vector<std::string> clean_text;
  std::vector<std::string> clean_entity;
  int label_id = -1;

  bool operator==(const CleanRecord&) const = default;
};

/// clean -> whitespace-tokenize -> stopword-remove -> normalize.
inline std::vector<std::string> preprocess_tokens(std::string_view raw, const PrepConfig& cfg) {
  auto tokens = whitespace_tokenize(clean_text(raw, cfg));
  if (cfg.enable_stopwords) tokens = remove_stopwords(tokens, cfg);
  if (cfg.enable_stemming)
    for (auto& t : tokens) t = normalize_word(t, cfg);
  return tokens;
}

inline CleanRecord preprocess_record(const RawRecord& r, const PrepConfig& cfg) {
  CleanRecord c;
  c.id = r.id;
  c.label_id = r.label_id;
  c.clean_text = preprocess_tokens(r.text, cfg);
  c.clean_entity = preprocess_tokens(r.entity, cfg);
  if (c.clean_entity.empty())
    throw DataError("record '" + r.id + "': entity is empty after preprocessing");
  if (c.clean_text.empty())
    throw DataError("record '" + r.id + "': text is empty after preprocessing");
  return c;
}

}  // namespace meder
