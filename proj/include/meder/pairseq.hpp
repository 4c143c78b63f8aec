#pragma once

// Packing of (text, entity) id sequences into the two complementary
// classifier inputs:
//   TextFirst:   [CLS] text   [SEP] entity [SEP] [PAD]...
//   EntityFirst: [CLS] entity [SEP] text   [SEP] [PAD]...
// Overflow truncates the text from the right; the entity is never cut.

#include <string>
#include <utility>
#include <vector>

#include "meder/errors.hpp"
#include "meder/tokenizer.hpp"

namespace meder {

enum class Order { TextFirst, EntityFirst };

inline const char* to_string(Order o) { return o == Order::TextFirst ? "text-first" : "entity-first"; }

struct EncodedPair {
  std::vector<TokenId> input_ids;
  std::vector<int> segment_ids;
  std::vector<int> attention_mask;
  Order order = Order::TextFirst;
  int label_id = 0;

  std::size_t length() const { return input_ids.size(); }

  bool operator==(const EncodedPair&) const = default;
};

using PairSample = std::pair<EncodedPair, EncodedPair>;

/// Smallest max_len that can hold the entity plus one text token.
inline std::size_t min_packed_length(std::size_t entity_len) { return 3 + entity_len + 1; }

inline EncodedPair build_pair(const std::vector<TokenId>& text_ids, const std::vector<TokenId>& entity_ids,
                              Order order, std::size_t max_len, int label_id = 0) {
  if (entity_ids.empty()) throw DataError("build_pair: empty entity");
  if (text_ids.empty()) throw DataError("build_pair: empty text");
  for (const auto* ids : {&text_ids, &entity_ids})
    for (TokenId t : *ids)
      if (t < 0 || t == kPadId || t == kClsId || t == kSepId)
        throw DataError("build_pair: token id " + std::to_string(t) + " cannot appear as content");
  if (max_len < min_packed_length(entity_ids.size()))
    throw DataError("build_pair: entity of " + std::to_string(entity_ids.size()) +
                    " tokens does not fit max_len " + std::to_string(max_len));

  const std::size_t text_room = max_len - 3 - entity_ids.size();
  const std::size_t text_len = std::min(text_room, text_ids.size());
  const auto text_begin = text_ids.begin();
  const auto text_end = text_ids.begin() + static_cast<std::ptrdiff_t>(text_len);

  EncodedPair p;
  p.order = order;
  p.label_id = label_id;
  p.input_ids.reserve(max_len);
  p.input_ids.push_back(kClsId);
  p.segment_ids.push_back(0);
  auto append = [&](auto first, auto last, int segment) {
    for (auto it = first; it != last; ++it) {
      p.input_ids.push_back(*it);
      p.segment_ids.push_back(segment);
    }
    p.input_ids.push_back(kSepId);
    p.segment_ids.push_back(segment);
  };
  if (order == Order::TextFirst) {
    append(text_begin, text_end, 0);
    append(entity_ids.begin(), entity_ids.end(), 1);
  } else {
    append(entity_ids.begin(), entity_ids.end(), 0);
    append(text_begin, text_end, 1);
  }
  p.attention_mask.assign(p.input_ids.size(), 1);
  p.input_ids.resize(max_len, kPadId);
  p.segment_ids.resize(max_len, 0);
  p.attention_mask.resize(max_len, 0);
  return p;
}

inline PairSample build_both(const std::vector<TokenId>& text_ids, const std::vector<TokenId>& entity_ids,
                             std::size_t max_len, int label_id = 0) {
  return {build_pair(text_ids, entity_ids, Order::TextFirst, max_len, label_id),
          build_pair(text_ids, entity_ids, Order::EntityFirst, max_len, label_id)};
}

/// One branch's block of a batch: row-major [batch x len].
struct BranchBlock {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<TokenId> input_ids;
  std::vector<int> segment_ids;
  std::vector<int> attention_mask;
  Order order = Order::TextFirst;
};

struct Batch {
  BranchBlock first;
  BranchBlock second;
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
};

inline BranchBlock make_block(const std::vector<const EncodedPair*>& pairs) {
  BranchBlock b;
  b.batch = pairs.size();
  if (pairs.empty()) return b;
  b.len = pairs.front()->length();
  b.order = pairs.front()->order;
  for (const EncodedPair* p : pairs) {
    if (p->length() != b.len) throw DataError("batch: pairs of different lengths");
    if (p->order != b.order) throw DataError("batch: pairs of different orders");
    b.input_ids.insert(b.input_ids.end(), p->input_ids.begin(), p->input_ids.end());
    b.segment_ids.insert(b.segment_ids.end(), p->segment_ids.begin(), p->segment_ids.end());
    b.attention_mask.insert(b.attention_mask.end(), p->attention_mask.begin(), p->attention_mask.end());
  }
  return b;
}

inline Batch make_batch(const std::vector<const PairSample*>& samples) {
  std::vector<const EncodedPair*> a, b;
  Batch out;
  for (const PairSample* s : samples) {
    a.push_back(&s->first);
    b.push_back(&s->second);
    out.labels.push_back(s->first.label_id);
  }
  out.first = make_block(a);
  out.second = make_block(b);
  return out;
}

/// Order-preserving chunks of `batch_size`; the last one may be short.
inline std::vector<Batch> batchify(const std::vector<PairSample>& pairs, std::size_t batch_size) {
  if (batch_size < 1) throw UsageError("batchify: batch_size must be at least 1");
  std::vector<Batch> out;
  for (std::size_t i = 0; i < pairs.size(); i += batch_size) {
    std::vector<const PairSample*> chunk;
    for (std::size_t j = i; j < std::min(pairs.size(), i + batch_size); ++j) chunk.push_back(&pairs[j]);
    out.push_back(make_batch(chunk));
  }
  return out;
}

/// Inverse of make_batch for one row; used to check reconstruction.
inline EncodedPair unpack_row(const BranchBlock& b, std::size_t row, int label_id) {
  EncodedPair p;
  const auto off = static_cast<std::ptrdiff_t>(row * b.len);
  const auto end = off + static_cast<std::ptrdiff_t>(b.len);
  p.input_ids.assign(b.input_ids.begin() + off, b.input_ids.begin() + end);
  p.segment_ids.assign(b.segment_ids.begin() + off, b.segment_ids.begin() + end);
  p.attention_mask.assign(b.attention_mask.begin() + off, b.attention_mask.begin() + end);
  p.order = b.order;
  p.label_id = label_id;
  return p;
}

/// Checks every packing invariant; returns an empty string when valid.
inline std::string check_pair_invariants(const EncodedPair& p) {
  const std::size_t n = p.input_ids.size();
  if (p.segment_ids.size() != n || p.attention_mask.size() != n) return "length mismatch";
  if (n == 0 || p.input_ids[0] != kClsId) return "first token is not [CLS]";
  std::size_t active = 0;
  while (active < n && p.attention_mask[active] == 1) ++active;
  for (std::size_t i = active; i < n; ++i)
    if (p.attention_mask[i] != 0) return "mask is not a prefix of ones";
  std::size_t seps = 0, cls = 0;
  bool second_segment = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pad = p.input_ids[i] == kPadId;
    if ((p.attention_mask[i] == 1) == pad) return "mask disagrees with padding at " + std::to_string(i);
    if (pad) {
      if (p.segment_ids[i] != 0) return "padding carries a non-zero segment";
      continue;
    }
    if (p.input_ids[i] == kClsId) ++cls;
    const int expect = second_segment ? 1 : 0;
    if (p.segment_ids[i] != expect) return "wrong segment id at " + std::to_string(i);
    if (p.input_ids[i] == kSepId && ++seps == 1) second_segment = true;
  }
  if (cls != 1) return "expected exactly one [CLS]";
  if (seps != 2) return "expected exactly two [SEP]";
  if (p.input_ids[active - 1] != kSepId) return "sequence does not end in [SEP]";
  return {};
}

}  // namespace meder
