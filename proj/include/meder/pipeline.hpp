#pragma once

// Raw records to packed dual-order pairs.

#include <string>
#include <vector>

#include "meder/corpus.hpp"
#include "meder/pairseq.hpp"
#include "meder/textprep.hpp"
#include "meder/tokenizer.hpp"

namespace meder {

inline PairSample encode_clean(const CleanRecord& c, const Vocab& v, std::size_t max_len) {
  try {
    return build_both(encode_text(c.clean_text, v), encode_text(c.clean_entity, v), max_len, c.label_id);
  } catch (const DataError& e) {
    throw DataError("record '" + c.id + "': " + e.what());
  }
}

inline std::vector<CleanRecord> preprocess_all(const std::vector<RawRecord>& records, const PrepConfig& cfg) {
  std::vector<CleanRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(preprocess_record(r, cfg));
  return out;
}

inline std::vector<PairSample> encode_all(const std::vector<CleanRecord>& records, const Vocab& v,
                                          std::size_t max_len) {
  std::vector<PairSample> out;
  out.reserve(records.size());
  for (const auto& c : records) out.push_back(encode_clean(c, v, max_len));
  return out;
}

inline std::vector<PairSample> encode_all(const std::vector<RawRecord>& records, const PrepConfig& cfg,
                                          const Vocab& v, std::size_t max_len) {
  return encode_all(preprocess_all(records, cfg), v, max_len);
}

/// Word lists used to induce a vocabulary: cleaned text and entity of every record.
inline std::vector<std::vector<std::string>> vocab_corpus(const std::vector<CleanRecord>& records) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : records) {
    out.push_back(c.clean_text);
    out.push_back(c.clean_entity);
  }
  return out;
}

/// Smallest packed length that holds every record without truncation.
inline std::size_t required_length(const std::vector<CleanRecord>& records, const Vocab& v) {
  std::size_t need = 0;
  for (const auto& c : records)
    need = std::max(need, 3 + encode_text(c.clean_text, v).size() + encode_text(c.clean_entity, v).size());
  return need;
}

}  // namespace meder
