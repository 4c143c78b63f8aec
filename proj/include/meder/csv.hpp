#pragma once

// RFC 4180 reading and conversion of raw tabular exports into corpus records.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meder/corpus.hpp"
#include "meder/errors.hpp"
#include "meder/unicode.hpp"

namespace meder {

using CsvRow = std::vector<std::string>;

/// Parses delimited text with double-quote escaping. Quoted fields may hold
/// delimiters, doubled quotes and line breaks. Lines may end in LF or CRLF.
inline std::vector<CsvRow> parse_csv(std::string_view text, char delim = ',') {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      ++i;
      end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

/// Tab when the first line holds a tab, comma otherwise.
inline char sniff_delimiter(std::string_view text) {
  const auto nl = text.find('\n');
  const auto first = text.substr(0, nl);
  return first.find('\t') != std::string_view::npos ? '\t' : ',';
}

namespace detail {

/// Lowercase ASCII letters and digits only: "Entity Name" -> "entityname".
inline std::string squash(std::string_view s) {
  std::string out;
  for (unsigned char c : s)
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

inline std::optional<std::size_t> find_column(const CsvRow& header, const std::vector<std::string>& names) {
  for (const auto& n : names)
    for (std::size_t i = 0; i < header.size(); ++i)
      if (squash(header[i]) == n) return i;
  return std::nullopt;
}

}  // namespace detail

struct ColumnMap {
  std::optional<std::size_t> id;
  std::size_t text = 0, entity = 1, label = 2;
};

/// Locates the text, entity, label and optional id columns by header name.
inline ColumnMap detect_columns(const CsvRow& header) {
  ColumnMap m;
  auto text = detail::find_column(header, {"text", "sentence", "statement", "medicaltext", "medicalstatement"});
  auto entity = detail::find_column(header, {"entity", "entityname", "medicalentity", "mention", "term", "word"});
  auto label = detail::find_column(header, {"label", "category", "class", "entitytype", "entityclass", "tag", "type"});
  if (!text || !entity || !label)
    throw DataError("csv header must name text, entity and label columns; got '" +
                    [&] {
                      std::string s;
                      for (const auto& h : header) s += (s.empty() ? "" : ",") + h;
                      return s;
                    }() +
                    "'");
  m.text = *text;
  m.entity = *entity;
  m.label = *label;
  m.id = detail::find_column(header, {"id", "recordid", "observationid"});
  return m;
}

struct ImportResult {
  std::vector<RawRecord> records;
  std::size_t rows_read = 0;
  /// Reason -> number of dropped rows.
  std::map<std::string, std::size_t> dropped;
  /// First few dropped rows as "row N: reason".
  std::vector<std::string> examples;

  std::size_t dropped_total() const {
    std::size_t n = 0;
    for (const auto& [_, c] : dropped) n += c;
    return n;
  }
};

/// Matches a raw label to the label set exactly, or ignoring case and any
/// character other than ASCII letters and digits.
inline std::optional<int> match_label(const std::string& raw, const LabelSet& labels) {
  if (auto id = labels.find(raw)) return id;
  const std::string key = detail::squash(raw);
  if (key.empty()) return std::nullopt;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (detail::squash(labels.name(static_cast<int>(i))) == key) return static_cast<int>(i);
  return std::nullopt;
}

/// Converts header + rows to validated records. Invalid rows are dropped and
/// tallied by reason rather than aborting the import.
inline ImportResult import_table(const std::vector<CsvRow>& table, const LabelSet& labels) {
  if (table.empty()) throw DataError("csv: no header row");
  const ColumnMap cols = detect_columns(table.front());
  const std::size_t width = table.front().size();
  ImportResult out;
  std::set<std::string> seen;
  auto drop = [&](std::size_t row_no, const std::string& reason) {
    ++out.dropped[reason];
    if (out.examples.size() < 20) out.examples.push_back("row " + std::to_string(row_no) + ": " + reason);
  };
  for (std::size_t r = 1; r < table.size(); ++r) {
    const CsvRow& row = table[r];
    const std::size_t row_no = r + 1;
    ++out.rows_read;
    if (row.size() != width) {
      drop(row_no, "wrong field count");
      continue;
    }
    bool valid = true;
    for (const auto& f : row) valid = valid && unicode::is_valid_utf8(f);
    if (!valid) {
      drop(row_no, "invalid UTF-8");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    RawRecord rec;
    rec.id = cols.id ? trim(row[*cols.id]) : "r" + std::to_string(r);
    rec.text = unicode::nfc(trim(row[cols.text]));
    rec.entity = unicode::nfc(trim(row[cols.entity]));
    const std::string raw_label = unicode::nfc(trim(row[cols.label]));
    if (rec.id.empty()) {
      drop(row_no, "empty id");
      continue;
    }
    if (rec.text.empty()) {
      drop(row_no, "empty text");
      continue;
    }
    if (rec.entity.empty()) {
      drop(row_no, "empty entity");
      continue;
    }
    const auto label_id = match_label(raw_label, labels);
    if (!label_id) {
      drop(row_no, "unknown label '" + raw_label + "'");
      continue;
    }
    if (!seen.insert(rec.id).second) {
      drop(row_no, "duplicate id");
      continue;
    }
    rec.label_id = *label_id;
    rec.label = labels.name(*label_id);
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace meder
