#pragma once

// Annotated corpus: JSONL records, label sets, deterministic splits and
// per-label statistics.

#include <boost/rational.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "meder/errors.hpp"
#include "meder/random.hpp"
#include "meder/unicode.hpp"

namespace meder {

using Fraction = boost::rational<std::int64_t>;

class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw DataError("label set: empty label name");
      if (!index_.emplace(names_[i], static_cast<int>(i)).second)
        throw DataError("label set: duplicate label '" + names_[i] + "'");
    }
  }

  /// The six entity categories, in the published order.
  static LabelSet defaults() {
    return LabelSet({"Medicine/Chemical Name", "Common Medical Terms", "Disease", "Organ",
                     "Pharmacological Class", "Hormone"});
  }

  /// One label per line; blank lines and surrounding whitespace are ignored.
  static LabelSet load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label file: " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
        line.pop_back();
      std::size_t b = line.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      names.push_back(unicode::nfc(line.substr(b)));
    }
    return LabelSet(std::move(names));
  }

  void save(std::ostream& out) const {
    for (const auto& n : names_) out << n << '\n';
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }

  std::optional<int> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int id(std::string_view name) const {
    auto found = find(name);
    if (!found) throw DataError("unknown label '" + std::string(name) + "'");
    return *found;
  }

  bool operator==(const LabelSet& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct RawRecord {
  std::string id;
  std::string text;
  std::string entity;
  std::string label;
  int label_id = -1;

  bool operator==(const RawRecord&) const = default;
};

struct LoadedCorpus {
  std::vector<RawRecord> records;
  /// Records whose entity is not a substring of the text. Counted, not fatal.
  std::size_t entity_not_in_text = 0;
};

namespace detail {

inline RawRecord parse_record_line(const std::string& line, std::size_t line_no,
                                   const LabelSet& labels) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + "malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(where + "record must be a JSON object");
  static constexpr std::array<std::string_view, 4> kFields = {"id", "text", "entity", "label"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end())
      throw DataError(where + "unknown field '" + key + "'");
    if (!value.is_string()) throw DataError(where + "field '" + key + "' must be a string");
  }
  for (auto f : kFields)
    if (!j.contains(std::string(f))) throw DataError(where + "missing field '" + std::string(f) + "'");

  RawRecord r;
  r.id = j["id"].get<std::string>();
  for (auto f : {"text", "entity", "label"})
    if (!unicode::is_valid_utf8(j[f].get<std::string>()))
      throw DataError(where + "field '" + f + "' is not valid UTF-8");
  r.text = unicode::nfc(j["text"].get<std::string>());
  r.entity = unicode::nfc(j["entity"].get<std::string>());
  r.label = unicode::nfc(j["label"].get<std::string>());
  if (r.id.empty()) throw DataError(where + "empty id");
  if (r.text.empty()) throw DataError(where + "empty text");
  if (r.entity.empty()) throw DataError(where + "empty entity");
  auto lid = labels.find(r.label);
  if (!lid) throw DataError(where + "unknown label '" + r.label + "'");
  r.label_id = *lid;
  return r;
}

}  // namespace detail

/// Parses JSONL records from a stream. Errors carry the 1-based line number.
inline LoadedCorpus read_corpus(std::istream& in, const LabelSet& labels) {
  LoadedCorpus out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    RawRecord r = detail::parse_record_line(line, line_no, labels);
    if (!seen.insert(r.id).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
    if (r.text.find(r.entity) == std::string::npos) ++out.entity_not_in_text;
    out.records.push_back(std::move(r));
  }
  return out;
}

inline LoadedCorpus load_corpus(const std::string& path, const LabelSet& labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return read_corpus(in, labels);
}

inline std::string record_to_json_line(const RawRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["entity"] = r.entity;
  j["label"] = r.label;
  return j.dump();
}

inline void write_corpus(std::ostream& out, const std::vector<RawRecord>& records) {
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
}

struct SplitSpec {
  Fraction train_frac{8, 10};
  Fraction val_frac{1, 10};
  Fraction test_frac{1, 10};
  std::uint64_t seed = 42;
  bool stratified = true;

  void validate() const {
    if (train_frac < 0 || val_frac < 0 || test_frac < 0)
      throw UsageError("split fractions must be non-negative");
    if (train_frac + val_frac + test_frac != Fraction(1))
      throw UsageError("split fractions must sum to exactly 1");
  }
};

/// Parses "0.8", "4/5" or "1" into an exact fraction.
inline Fraction parse_fraction(std::string_view s) {
  std::string str(s);
  auto bad = [&] { return UsageError("not a fraction: '" + str + "'"); };
  if (str.empty()) throw bad();
  if (auto slash = str.find('/'); slash != std::string::npos) {
    try {
      std::size_t pos = 0;
      const long long num = std::stoll(str.substr(0, slash), &pos);
      if (pos != slash) throw bad();
      const std::string den_s = str.substr(slash + 1);
      const long long den = std::stoll(den_s, &pos);
      if (pos != den_s.size() || den == 0) throw bad();
      return Fraction(num, den);
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  std::int64_t num = 0, den = 1;
  bool dot = false, any = false;
  for (char c : str) {
    if (c == '.' && !dot) {
      dot = true;
    } else if (c >= '0' && c <= '9') {
      if (num > (INT64_MAX - 9) / 10 || (dot && den > INT64_MAX / 10)) throw bad();
      num = num * 10 + (c - '0');
      if (dot) den *= 10;
      any = true;
    } else {
      throw bad();
    }
  }
  if (!any) throw bad();
  return Fraction(num, den);
}

struct Splits {
  std::vector<RawRecord> train, val, test;
};

namespace detail {

inline std::size_t floor_times(std::size_t n, Fraction f) {
  return static_cast<std::size_t>(static_cast<std::int64_t>(n) * f.numerator() / f.denominator());
}

}  // namespace detail

/// Deterministic partition. Unstratified: val and test get floor(n*frac), train
/// the remainder. Stratified: each label group is apportioned by largest
/// remainder, so every split holds each label within one record of its quota.
/// Records keep their file order inside each split.
inline Splits split(const std::vector<RawRecord>& records, const SplitSpec& spec) {
  spec.validate();
  if (records.empty()) throw DataError("split: no records");
  Rng rng(spec.seed);
  std::vector<int> assign(records.size(), 0);  // 0 train, 1 val, 2 test

  auto assign_group = [&](std::vector<std::size_t> idx, std::size_t val_n, std::size_t test_n) {
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k)
      assign[idx[k]] = k < val_n ? 1 : (k < val_n + test_n ? 2 : 0);
  };

  if (!spec.stratified) {
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t n = records.size();
    assign_group(std::move(idx), detail::floor_times(n, spec.val_frac),
                 detail::floor_times(n, spec.test_frac));
  } else {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].label_id].push_back(i);
    const std::array<Fraction, 3> fracs = {spec.train_frac, spec.val_frac, spec.test_frac};
    for (auto& [label, idx] : groups) {
      const auto n = static_cast<std::int64_t>(idx.size());
      std::array<std::int64_t, 3> count{};
      std::array<Fraction, 3> remainder;
      std::int64_t assigned = 0;
      for (int s = 0; s < 3; ++s) {
        const Fraction quota = fracs[s] * n;
        count[s] = quota.numerator() / quota.denominator();
        remainder[s] = quota - count[s];
        assigned += count[s];
      }
      // Leftover records go to the largest remainders; ties rotate with the
      // label id so no split systematically collects the extras.
      std::array<int, 3> order = {0, 1, 2};
      const int rot = ((label % 3) + 3) % 3;
      std::rotate(order.begin(), order.begin() + rot, order.end());
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return remainder[a] > remainder[b]; });
      for (std::int64_t k = 0; assigned < n; ++k, ++assigned) ++count[order[k % 3]];
      assign_group(idx, static_cast<std::size_t>(count[1]), static_cast<std::size_t>(count[2]));
    }
  }

  Splits out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& dst = assign[i] == 0 ? out.train : (assign[i] == 1 ? out.val : out.test);
    dst.push_back(records[i]);
  }
  if (out.train.empty()) throw UsageError("split: fractions leave the train split empty");
  return out;
}

/// FNV-1a over record ids in order; identifies a split independent of content.
inline std::uint64_t fingerprint(const std::vector<RawRecord>& records) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& r : records) {
    for (unsigned char c : r.id) mix(c);
    mix(0);
  }
  return h;
}

inline std::string fingerprint_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

struct ClassStats {
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

inline ClassStats class_stats(const std::vector<RawRecord>& records, std::size_t n_labels) {
  ClassStats s;
  s.counts.assign(n_labels, 0);
  for (const auto& r : records) {
    if (r.label_id < 0 || static_cast<std::size_t>(r.label_id) >= n_labels)
      throw DataError("class_stats: label id out of range for record '" + r.id + "'");
    ++s.counts[static_cast<std::size_t>(r.label_id)];
    ++s.total;
  }
  return s;
}

/// Per-category counts of the published dataset, in LabelSet::defaults() order,
/// and the observation total stated alongside them. The counts sum to 6913.
inline constexpr std::array<std::size_t, 6> kPublishedCounts = {1938, 1127, 1098, 1066, 877, 807};
inline constexpr std::size_t kPublishedDeclaredTotal = 6895;

/// Warnings for `stats`: a total that disagrees with the declared one, either
/// given explicitly or implied by matching the published per-category counts.
inline std::vector<std::string> stats_warnings(const ClassStats& s, const LabelSet& labels,
                                               std::optional<std::size_t> declared_total) {
  std::vector<std::string> out;
  if (!declared_total && labels == LabelSet::defaults() && s.counts.size() == 6 &&
      std::equal(s.counts.begin(), s.counts.end(), kPublishedCounts.begin()))
    declared_total = kPublishedDeclaredTotal;
  if (declared_total && *declared_total != s.total) {
    out.push_back("total discrepancy: per-label counts sum to " + std::to_string(s.total) +
                  " but the declared observation total is " + std::to_string(*declared_total) +
                  " (difference " +
                  std::to_string(static_cast<long long>(s.total) -
                                 static_cast<long long>(*declared_total)) +
                  ")");
  }
  return out;
}

}  // namespace meder
